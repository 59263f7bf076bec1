"""Per-criterion results collected by test_acceptance and printed at session end."""

RESULTS: dict[str, tuple[bool, str]] = {}


def report(key, ok, detail=""):
    RESULTS[str(key)] = (bool(ok), detail)
    return ok
