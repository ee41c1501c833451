"""Default numerical tolerances shared across modules."""

#: Eigenvalue distance from the stability boundary below which a system
#: is treated as not (strictly) stable.
STABILITY_TOL = 1e-9

#: Relative bound on the smallest singular value of a feedthrough matrix
#: for it to count as invertible: sigma_min(D) >= INVERT_TOL * (1 + ||D||).
INVERT_TOL = 1e-9

#: Margins within +/- STRICT_TOL are classified as non-strict.
STRICT_TOL = 1e-8

#: Rank threshold for range/kernel splits.
RANK_TOL = 1e-10

#: lambda*I - A with condition number above 1/RESOLVENT_TOL is singular.
RESOLVENT_TOL = 1e-13

#: Relative accuracy of the H-infinity norm.
HINF_TOL_CT = 1e-6
HINF_TOL_DT = 1e-4

#: Residual bound used when certifying identities (scaled by magnitudes).
RESIDUAL_TOL = 1e-6

#: Default number of points in the logarithmic part of a grid; the
#: IQC_GRID_POINTS environment variable overrides it.
GRID_POINTS = 400
