"""Collects one result line per acceptance criterion for the terminal summary."""

RESULTS = {}


def record(number, title, passed, detail):
    RESULTS[number] = (title, passed, detail)
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    print(line)
    return line
