"""Constants shared by the numpy and numba kernel backends."""

GAMMA = 1.4

# boundary kinds baked into the setup tables (-1 marks an interior face)
BC_DIRICHLET = 0   # frozen exterior state
BC_OUTFLOW = 1     # zero-order extrapolation of the interior value
BC_SLIPWALL = 2    # mirror the normal velocity
BC_DMR_TOP = 3     # oblique-shock exterior state, shock foot at x_s(t)

# x position of the moving oblique shock on the top boundary of the
# double Mach reflection case: x_s(t) = 1/6 + (1 + 20 t)/sqrt(3)
DMR_X0 = 1.0 / 6.0
DMR_SQRT3 = 3.0 ** 0.5
