"""Richardson-extrapolated central differences."""


def richardson(f, x, h=1e-2, levels=5):
    """Derivative of ``f`` at ``x`` from a Richardson table of central differences."""
    table = []
    for i in range(levels):
        hi = h / 2 ** i
        row = [(f(x + hi) - f(x - hi)) / (2 * hi)]
        for k in range(1, i + 1):
            row.append(row[k - 1] + (row[k - 1] - table[i - 1][k - 1]) / (4 ** k - 1))
        table.append(row)
    return table[-1][-1]
