import math
import wave

import numpy as np


def write_wav(path, freq=440.0, seconds=0.3, rate=8000, seed=0, width=2):
    """Write a small mono PCM WAV: a sine tone plus light noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * rate)) / rate
    signal = 0.6 * np.sin(2 * math.pi * freq * t) + 0.05 * rng.standard_normal(t.size)
    signal = np.clip(signal, -1.0, 1.0)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        if width == 2:
            wf.writeframes((signal * 32767).astype("<i2").tobytes())
        else:
            raise ValueError("only 16-bit test fixtures supported")
    return path
