from app.commands import g2, pattern, steady, trajectory, validate

COMMANDS = {
    "steady": steady,
    "pattern": pattern,
    "g2": g2,
    "trajectory": trajectory,
    "validate": validate,
}

__all__ = ["COMMANDS"]
