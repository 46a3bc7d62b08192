TRIAGE_PREFIX = "triage"


def triage_key(target_hash: str, input_hash: str, debugger_name: str) -> str:
    """Key of a cached triage result: the same input on the same binary under the same debugger."""
    return f"{TRIAGE_PREFIX}:{debugger_name}:{target_hash}:{input_hash}"
