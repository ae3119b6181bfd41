"""Entry point for python -m refractive_tomography.

Allows the package to be run as a module:
    python -m refractive_tomography [command] [options]

Example:
    python -m refractive_tomography simulate --seed 0
    python -m refractive_tomography reconstruct output/simulate/dataset --preset beads
    python -m refractive_tomography --help
"""

from refractive_tomography.cli import main

if __name__ == "__main__":
    main()
