"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = []


def record(number, passed, detail):
    """``passed`` is True, False or None (skipped for lack of data)."""
    verdict = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"criterion {str(number):>3}: {verdict}  {detail}"
    LINES.append(line)
    print(line)
    return passed
