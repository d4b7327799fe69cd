"""Acceptance verdict lines, echoed in the terminal summary by conftest."""

LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> str:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return line
