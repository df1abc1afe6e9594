"""Late-time tails of small solutions of the radial semilinear wave equation."""
