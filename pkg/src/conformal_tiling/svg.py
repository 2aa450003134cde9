"""Tiny deterministic SVG builder.

Coordinates are given in a math frame (y up) and flipped on output. Numbers
are printed with a fixed number of decimals so identical inputs give
identical bytes.
"""

from ._io import atomic_write

FILL = {0: "#e6e6e6", 1: "#1e1e1e"}  # white, black


def _fmt(x):
    s = f"{x:.5f}"
    return "0.00000" if s == "-0.00000" else s


class SvgCanvas:
    def __init__(self, xmin, ymin, xmax, ymax, size=800):
        self.xmin, self.ymin, self.xmax, self.ymax = xmin, ymin, xmax, ymax
        span = max(xmax - xmin, ymax - ymin) or 1.0
        self.scale = size / span
        self.width = (xmax - xmin) * self.scale
        self.height = (ymax - ymin) * self.scale
        self.items = []

    def _xy(self, x, y):
        return (x - self.xmin) * self.scale, (self.ymax - y) * self.scale

    def polygon(self, pts, fill="none", stroke="#808080", stroke_width=0.4):
        coords = " ".join("{},{}".format(*map(_fmt, self._xy(x, y))) for x, y in pts)
        self.items.append(
            f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{stroke_width}"/>'
        )

    def circle(self, x, y, r, stroke="#000000", stroke_width=1.0):
        cx, cy = self._xy(x, y)
        self.items.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r * self.scale)}" '
            f'fill="none" stroke="{stroke}" stroke-width="{stroke_width}"/>'
        )

    def render(self):
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n'
        )
        return head + "".join(f"  {item}\n" for item in self.items) + "</svg>\n"

    def save(self, path):
        return atomic_write(path, self.render())
