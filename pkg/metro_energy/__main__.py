import sys
from metro_energy.cli import main

sys.exit(main())
