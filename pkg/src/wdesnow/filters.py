"""Wavelet filter tap tables.

Three published filter sets, embedded as constants:

* Level-1 biorthogonal 9/7 analysis pair (Antonini, Barlaud, Mathieu &
  Daubechies, "Image coding using wavelet transform", IEEE Trans. Image
  Processing 1(2), 1992).  The synthesis pair follows from the standard
  alternating-sign relation for two-channel biorthogonal banks.
* 14-tap quarter-sample-shift orthonormal pair for the deeper dual-tree
  levels (Kingsbury, "Complex wavelets for shift invariant analysis and
  filtering of signals", Applied and Computational Harmonic Analysis 10(3),
  2001).  One prototype lowpass generates both trees: tree A is the
  time-reverse of tree B, so their group delays straddle the half-sample
  point, and each tree's highpass is the conjugate-quadrature mate.
* Daubechies 4-tap orthonormal filter (Daubechies, "Ten Lectures on
  Wavelets", SIAM 1992) for the plain-DWT baseline.

Transcription is guarded by tests: each pair must reconstruct a delta to
better than 1e-8 through one analysis/synthesis level.
"""

from __future__ import annotations

import numpy as np

# Antonini 9/7 analysis filters.  The lowpass has 9 taps (symmetric about
# index 4), the highpass 7 taps (symmetric about index 3).
LEVEL1_ANA_LO = np.array([
    0.0267487574108101, -0.0168641184428747, -0.0782232665289905,
    0.2668641184428729, 0.6029490182363593, 0.2668641184428769,
    -0.0782232665289884, -0.0168641184428753, 0.0267487574108096,
])
LEVEL1_ANA_HI = np.array([
    0.0456358815571251, -0.0287717631142493, -0.2956358815571280,
    0.5575435262285023, -0.2956358815571233, -0.0287717631142531,
    0.0456358815571261,
])

# Synthesis duals via the alternating-sign relation g0[n] = (-1)^(n+1) h1[n],
# g1[n] = (-1)^n h0[n].  The analysis pair above is normalized to unit DC
# gain, which leaves the two-channel bank with an overall gain of 1/2; the
# factor 2 here restores unit end-to-end gain.
LEVEL1_SYN_LO = LEVEL1_ANA_HI.copy()
LEVEL1_SYN_LO[0::2] *= -1.0
LEVEL1_SYN_LO *= 2.0
LEVEL1_SYN_HI = LEVEL1_ANA_LO.copy()
LEVEL1_SYN_HI[1::2] *= -1.0
LEVEL1_SYN_HI *= 2.0

# Alignment: the lowpass is applied with its symmetric center (index 4).
# The highpass is applied one sample right of its symmetric center (index 4
# of 7 taps) so that both subbands decimate on the same phase; both trees
# then share one downsampling grid, and tree B is the input delayed by one
# full-rate sample.  Synthesis centers follow from the perfect-reconstruction
# identity under this alignment.
LEVEL1_ANA_LO_CENTER = 4
LEVEL1_ANA_HI_CENTER = 4
LEVEL1_SYN_LO_CENTER = 3
LEVEL1_SYN_HI_CENTER = 5

# Kingsbury quarter-shift prototype lowpass, 14 taps (tree B).
QSHIFT_LO_B = np.array([
    0.0032531427636532, -0.0038832119991585, 0.0346603468448535,
    -0.0388728012688278, -0.1172038876991153, 0.2752953846688820,
    0.7561456438925225, 0.5688104207121227, 0.0118660920337970,
    -0.1067118046866654, 0.0238253847949203, 0.0170252238815540,
    -0.0054394759372741, -0.0045568956284755,
])
QSHIFT_LO_A = QSHIFT_LO_B[::-1].copy()

# Conjugate-quadrature highpass mates: negate alternate samples so that the
# highpass of each tree is orthogonal to every even shift of its lowpass.
_odd_start = (len(QSHIFT_LO_B) // 2 + 1) % 2
QSHIFT_HI_A = QSHIFT_LO_B.copy()
QSHIFT_HI_A[_odd_start::2] *= -1.0
QSHIFT_HI_B = QSHIFT_HI_A[::-1].copy()

QSHIFT_CENTER = len(QSHIFT_LO_B) // 2

# Tree-B input offsets (in parent samples) applied before the quarter-shift
# filtering.  The reversed/forward filter pair differs in group delay by half
# a parent sample; adding an integer input offset brings the total inter-tree
# delay to half the output sampling interval on highpass axes (offset 1) and
# three half-samples on lowpass axes (offset 2), which maximizes the
# quadrature quality in each band's passband.  Chosen empirically by the
# oriented-grating energy measurement frozen in the tests.
QSHIFT_TREE_B_OFFSET_LO = 2
QSHIFT_TREE_B_OFFSET_HI = 1

# Daubechies 4-tap orthonormal lowpass and its conjugate-quadrature highpass.
_s3 = np.sqrt(3.0)
DB2_LO = np.array([1.0 + _s3, 3.0 + _s3, 3.0 - _s3, 1.0 - _s3]) / (4.0 * np.sqrt(2.0))
DB2_HI = np.array([(-1.0) ** k * DB2_LO[3 - k] for k in range(4)])
DB2_CENTER = 2


def _delayed(taps: np.ndarray) -> np.ndarray:
    """Same filter delayed by one sample (a leading zero tap)."""
    return np.concatenate([[0.0], taps])


class FilterBank:
    """The level-1 biorthogonal pairs for both trees plus the Q-shift pairs.

    Tree B at level 1 is tree A delayed by one full-rate sample; the delayed
    tap vectors are materialized here so the relationship is inspectable,
    while the transform realizes the same delay by sampling phase.
    """

    def __init__(self):
        self.level1_lo_a = LEVEL1_ANA_LO.copy()
        self.level1_hi_a = LEVEL1_ANA_HI.copy()
        self.level1_lo_b = _delayed(LEVEL1_ANA_LO)
        self.level1_hi_b = _delayed(LEVEL1_ANA_HI)
        self.level1_syn_lo = LEVEL1_SYN_LO.copy()
        self.level1_syn_hi = LEVEL1_SYN_HI.copy()
        self.qshift_lo_a = QSHIFT_LO_A.copy()
        self.qshift_lo_b = QSHIFT_LO_B.copy()
        self.qshift_hi_a = QSHIFT_HI_A.copy()
        self.qshift_hi_b = QSHIFT_HI_B.copy()
        # orthonormal trees: synthesis reuses the analysis taps (adjoint)
        self.qshift_syn_lo = QSHIFT_LO_A.copy()
        self.qshift_syn_hi = QSHIFT_HI_A.copy()


DEFAULT_FILTER_BANK = FilterBank()
