"""Reference values computed independently of the package and frozen.

Kac expectations: mpmath quadrature (30 digits) of the Kac density for a
polynomial with i.i.d. N(0, 1) coefficients, 4/pi int_0^1 sqrt(1/(1-t^2)^2
- (d+1)^2 t^(2d) / (1-t^(2d+2))^2) dt.

Bessel landmarks: classical tabulated zeros of J_0, J_1 (the first minimum
of J_0 is the first positive zero of J_1).
"""

KAC_EXPECTED = {
    10: 2.15027225457355,
    25: 2.69954539752707,
    100: 3.5637889971008,
    400: 4.44160865882155,
}

J0_FIRST_ZERO = 2.404825557695773
J1_FIRST_ZERO = 3.831705970207512

# energy of the two-tree arrangement: 2*2*(2*2+2) + 2*(2+2*2)
TWO_TREE_ENERGY = 36
TWO_TREE_EMPTY_OVALS = 4
