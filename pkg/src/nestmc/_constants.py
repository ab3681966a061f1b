"""Frozen oracle constants for the built-in models.

Generated by tools/freeze_constants.py; do not edit by hand.  Each value was
computed by two independent routes required to agree to better than 1e-8.
"""

GAUSS_LOG_TRUTH = -1.1638436421951108
BIAS_QUAD_C = 0.08437188178201517
LINEAR_GAUSS_TRUTH = 0.40853641936875973
GAMMA_AT_0 = 0.3568248232305542
GAMMA_AT_1 = 0.23918683193456397
