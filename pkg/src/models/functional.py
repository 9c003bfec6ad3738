import numpy as np

from ..errors import ConfigError


def softmax(v, temperature=1.0):
    """Softmax over the last axis of v / temperature, computed with max-subtraction."""
    if temperature <= 0:
        raise ConfigError(f"Softmax temperature must be positive, got {temperature}")
    z = np.asarray(v) / temperature
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(v, temperature=1.0):
    if temperature <= 0:
        raise ConfigError(f"Softmax temperature must be positive, got {temperature}")
    z = np.asarray(v) / temperature
    z = z - np.max(z, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def huber(x, delta=1.0):
    a = np.abs(x)
    return np.where(a <= delta, 0.5 * x * x, delta * (a - 0.5 * delta))


def huber_grad(x, delta=1.0):
    return np.clip(x, -delta, delta)
