import hashlib

SEED_BITS = 63


def derive_seed(master, *labels):
    """
    Independent stream seed for (master seed, labels...), e.g. derive_seed(seed, "phase1", "mini-pong").

    Streams depend only on their own labels, so adding or removing a task never shifts another
    task's stream.
    """
    key = "/".join([str(int(master)), *map(str, labels)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << SEED_BITS) - 1)
