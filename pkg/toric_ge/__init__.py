# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""Global entanglement of the perturbed toric code from Monte Carlo of the 2D Ising model."""
