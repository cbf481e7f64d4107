"""Fixed binary-descriptor sampling pattern.

256 comparison pairs, each a (x1, y1, x2, y2) offset quadruple relative to
the keypoint, drawn once from a Gaussian (sigma 5.0) clipped to the
radius-15 descriptor patch and frozen here as a literal table so
descriptors stay bit-compatible across builds and library versions.
Generator: numpy default_rng(seed=0x5A2C0DE), rejection-sampled to the
patch disk.
"""

PATCH_RADIUS = 15

SAMPLING_PATTERN = (
    (-3, -1, 2, 6), (9, -1, 6, 3), (1, 5, 3, 3), (2, -2, -4, 1),
    (1, -2, 5, -5), (-3, -7, 3, 2), (-2, 4, -5, -1), (-5, -7, -4, -4),
    (-1, -7, -6, 1), (-4, 0, -6, -5), (6, -4, -7, -9), (-1, -2, 3, 2),
    (4, 4, -2, -4), (0, 2, -3, 2), (-2, 0, -5, 0), (6, 3, 4, -5),
    (3, -5, 11, -2), (-13, -6, 10, 4), (5, -2, 5, 3), (-4, 13, -2, 4),
    (3, 3, -3, 1), (0, -3, -5, -1), (-2, -3, 6, 8), (0, -1, 2, 0),
    (0, 6, 3, -1), (-6, 10, 0, -2), (-2, -8, -2, -1), (-5, -5, -4, 0),
    (-4, 2, -6, 5), (-8, -6, 11, -4), (-2, 1, -4, 6), (4, -4, 8, 5),
    (2, -4, -8, 10), (-6, 4, 7, -3), (-1, -3, -2, -3), (4, 1, 0, 2),
    (5, -1, 11, 1), (3, 10, 7, 3), (-4, 3, -6, 2), (3, -3, -10, 2),
    (0, -3, -3, -5), (14, -4, -6, 5), (-5, -3, 0, 7), (-6, 2, 0, 0),
    (4, -1, -3, 9), (10, 6, -14, -4), (0, 1, 2, 0), (-4, 4, 0, -6),
    (-5, -10, 5, -1), (-1, 1, 0, -2), (-5, 4, 1, -1), (-13, 1, -1, 5),
    (3, -2, 2, 0), (3, -1, -2, 12), (-4, 4, 0, 1), (-3, -2, -6, -5),
    (2, -2, 2, -6), (1, 1, -7, -3), (-7, -2, -6, -5), (1, 2, 1, -4),
    (0, 5, 8, 5), (7, -1, -2, 1), (4, 4, 3, 2), (-1, 5, 3, 1),
    (1, 9, 0, -1), (-7, -2, 1, -5), (-7, -11, -2, -7), (2, -4, -7, -4),
    (2, 2, -5, -6), (7, 2, 4, -5), (7, -6, 3, -3), (-3, 8, 1, 6),
    (-9, -5, 11, 2), (-7, 1, -6, 2), (-6, 3, -4, -1), (-12, 7, -4, 2),
    (1, -7, 5, 0), (6, -7, 6, 0), (-2, -4, -3, -5), (-5, -10, 4, 3),
    (-2, 6, 1, 9), (8, -5, -4, -3), (0, 5, 5, 4), (-4, 6, 6, -4),
    (6, 4, -5, 7), (-2, 0, 0, 1), (3, 0, 4, -2), (-4, 7, 2, 5),
    (-6, 1, -1, -7), (-3, -5, 2, -2), (-1, -3, 0, -11), (-2, -5, 5, -5),
    (5, -5, 1, -4), (-4, 1, 0, -3), (1, -2, 0, 3), (5, -7, 5, -5),
    (-2, 10, -6, -2), (-2, 3, -6, -1), (6, -1, 6, -2), (3, 2, 8, -6),
    (0, -11, 6, 3), (0, -1, -2, 2), (7, -3, 4, -7), (-3, -4, 6, -2),
    (5, 8, -4, -1), (-2, -8, 1, 0), (0, 3, 6, 2), (-6, -7, 2, -4),
    (3, 0, 1, 5), (-5, -3, 2, -8), (13, 5, 6, 0), (-4, -5, 1, 5),
    (3, -4, 4, 6), (-2, 4, 5, -5), (-8, 1, 6, 0), (-8, 1, 0, -3),
    (0, -5, -2, 9), (1, -4, 5, 3), (-2, -4, -11, 5), (10, 2, -1, -4),
    (7, 8, 5, 3), (-3, -4, 3, 5), (5, 0, 1, -3), (-6, -7, -1, -1),
    (-1, -3, -1, 6), (7, 6, 1, 6), (-2, 8, 10, -2), (-12, 5, -4, 1),
    (4, 0, 2, 1), (-8, -2, 6, -8), (2, -5, 0, 11), (-5, 4, 6, -5),
    (-3, -3, -7, 4), (2, -2, 4, -6), (-1, -4, 2, 0), (-3, 14, -7, 4),
    (3, -3, 5, 1), (-1, 1, -3, -3), (5, 6, 2, 4), (-5, -5, 1, 3),
    (3, -7, -8, -8), (-6, 2, 2, -8), (2, -7, 1, 1), (-3, -3, 8, 1),
    (-4, -14, -6, 6), (3, -4, 2, -5), (2, 3, -3, -1), (4, 5, -1, -11),
    (-4, -2, 10, -2), (-7, -1, -4, -2), (-7, 3, 1, -3), (-3, -4, 0, 0),
    (1, -3, -3, 8), (7, -2, 4, 3), (6, 8, 2, -2), (-1, 8, -4, 3),
    (-1, 3, 7, 4), (5, 1, 7, 3), (-5, -3, -5, 1), (-2, 1, -2, -6),
    (-3, 4, -2, 0), (-2, -4, 0, 1), (-3, 0, -3, 2), (0, 4, -4, -5),
    (-10, 0, -1, 9), (-1, -9, 2, -7), (-5, -1, -1, -1), (0, 1, 2, 2),
    (-13, 4, -2, -5), (-7, 6, 2, 3), (1, -12, -6, -2), (-6, -3, 5, 4),
    (-12, 4, -13, -4), (-1, 0, -8, 2), (5, -7, -2, 1), (4, -2, 4, -1),
    (-1, -7, -5, 0), (2, -3, -3, -9), (6, -1, -3, -10), (-5, -3, 0, -5),
    (3, -3, 4, 1), (2, 0, 3, 4), (1, -7, -12, 0), (0, -6, 9, 7),
    (-6, 4, 0, -7), (0, -4, 8, 4), (11, -3, 10, -2), (-1, 2, -1, -2),
    (-8, -2, 4, -1), (3, -8, -2, 11), (-2, 10, 0, -6), (-3, -4, 1, 3),
    (3, 5, 2, 0), (-8, 0, -1, -1), (2, 8, -6, -1), (-3, -2, -4, -8),
    (-3, -3, 3, 1), (4, 3, 7, 0), (4, 9, -3, -7), (2, 3, -8, -5),
    (1, -5, 0, 0), (-4, 3, 3, 4), (-5, -2, -1, 2), (-1, 2, 8, 0),
    (7, 5, 4, -6), (3, -3, 3, 1), (-10, -8, -1, 5), (-5, 1, 3, 0),
    (1, 1, 9, 8), (0, 5, 0, -3), (-2, -7, -1, -1), (4, 4, -4, -3),
    (-4, -1, 0, -4), (-1, 0, 7, -5), (0, -2, 5, -2), (5, -5, -2, -1),
    (2, -7, 1, -6), (0, -8, -6, -3), (6, -1, -4, -3), (6, -2, 11, -5),
    (-2, -5, -5, -5), (-2, -2, 1, -2), (4, 5, -4, -10), (5, 0, 10, 7),
    (-3, -3, -2, 6), (-7, 2, -2, -4), (2, -4, 8, -4), (2, 2, 2, -1),
    (6, 6, 1, 2), (8, 9, -1, 7), (5, -9, -1, -2), (-1, -9, -4, -8),
    (-1, -4, -2, 5), (-1, 1, 1, -2), (4, 11, -1, 3), (-3, -4, 3, -2),
    (-2, -8, 3, -1), (5, -10, -5, -2), (-4, 4, -4, 1), (-4, 2, 9, 3),
    (2, 2, 6, 4), (-3, -3, -5, 4), (1, 0, 0, 3), (2, -4, 2, -1),
    (0, 5, -3, -6), (9, -5, -10, 0), (1, 4, 0, 1), (3, 2, 2, 1),
    (-3, 4, 1, 0), (1, 0, -1, -1), (-1, 2, -6, -1), (-1, -2, -1, 9),
    (-5, 0, 2, 5), (-1, 2, 3, -4), (0, 5, -9, 3), (-2, -4, 10, 6),
)
