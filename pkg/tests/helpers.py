"""Small constructors shared by the test modules."""

import numpy as np

from wtsel.core import WtSeries, parse_wt


def one_point_series(codes_or_ints, start="2000-06-01", tid="toy", point=(0.0, 40.0)):
    values = np.array([[parse_wt(c).value] for c in codes_or_ints])
    dates = np.datetime64(start) + np.arange(len(values))
    return WtSeries(tid, (point,), dates, values)
