# WARNING: This file is necessary for pytest to calculate the coverage!