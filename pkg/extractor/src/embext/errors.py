class JobError(Exception):
    """An extraction job is malformed or cannot be executed."""
