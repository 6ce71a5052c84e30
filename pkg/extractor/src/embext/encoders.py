"""Encoder backends.

``spectral`` is a self-contained, deterministic baseline encoder with
no model downloads: log-band spectral statistics for audio and hashed
character trigrams for text, both projected into a shared output space
with a fixed random projection. It exists so extraction pipelines can
be built and tested offline; it does not provide semantic audio-text
alignment.

``clap`` wraps a pretrained contrastive audio-text model via the
``transformers`` package (optional dependency) and is the default for
real experiments.
"""

from __future__ import annotations

import hashlib
import wave
from dataclasses import dataclass

import numpy as np

from .errors import JobError

_BANDS = 48
_FRAME = 1024
_HOP = 512
_PROJECTION_SEED = 0xE3B7


def load_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV file as mono float32 in [-1, 1] plus sample rate."""
    try:
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise JobError(f"{path}: cannot decode WAV: {exc}") from exc
    if width == 2:
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    elif width == 4:
        samples = np.frombuffer(raw, dtype="<i4").astype(np.float32) / 2147483648.0
    elif width == 1:
        samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.float32) - 128) / 128.0
    else:
        raise JobError(f"{path}: unsupported sample width {width}")
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return samples, rate


@dataclass(frozen=True)
class SpectralEncoder:
    """Offline deterministic encoder; output width is configurable."""

    dim: int = 512

    name = "spectral"
    version = "1"

    def _stats(self) -> int:
        return 2 * _BANDS

    def _projection(self) -> np.ndarray:
        rng = np.random.default_rng(_PROJECTION_SEED)
        return rng.standard_normal((self._stats(), self.dim)) / np.sqrt(self._stats())

    def _band_energies(self, samples: np.ndarray) -> np.ndarray:
        if samples.size < _FRAME:
            samples = np.pad(samples, (0, _FRAME - samples.size))
        n_frames = 1 + (samples.size - _FRAME) // _HOP
        window = np.hanning(_FRAME)
        frames = np.lib.stride_tricks.sliding_window_view(samples, _FRAME)[::_HOP]
        spectra = np.abs(np.fft.rfft(frames[:n_frames] * window, axis=1)) ** 2
        n_bins = spectra.shape[1]
        # log-spaced band edges over the positive-frequency bins
        edges = np.unique(
            np.round(np.geomspace(1, n_bins - 1, _BANDS + 1)).astype(int)
        )
        bands = np.zeros((spectra.shape[0], _BANDS))
        for b in range(min(_BANDS, len(edges) - 1)):
            bands[:, b] = spectra[:, edges[b] : edges[b + 1] + 1].sum(axis=1)
        return np.log1p(bands)

    def encode_audio(self, samples: np.ndarray, rate: int) -> np.ndarray:
        bands = self._band_energies(np.asarray(samples, dtype=np.float64))
        stats = np.concatenate([bands.mean(axis=0), bands.std(axis=0)])
        return (stats @ self._projection()).astype(np.float32)

    def encode_text(self, text: str) -> np.ndarray:
        counts = np.zeros(self._stats())
        padded = f"  {text.lower()}  "
        for i in range(len(padded) - 2):
            trigram = padded[i : i + 3].encode("utf-8")
            bucket = int.from_bytes(
                hashlib.blake2s(trigram, digest_size=4).digest(), "little"
            ) % self._stats()
            counts[bucket] += 1.0
        return (np.log1p(counts) @ self._projection()).astype(np.float32)


@dataclass(frozen=True)
class ClapEncoder:
    """Pretrained contrastive audio-text encoder via ``transformers``."""

    model_id: str = "laion/clap-htsat-unfused"

    name = "clap"
    version = "2023"

    def _load(self):
        try:
            import torch  # noqa: F401
            from transformers import ClapModel, ClapProcessor
        except ImportError as exc:
            raise JobError(
                "encoder 'clap' needs the optional dependencies; install "
                "with: pip install 'embext[clap]'"
            ) from exc
        model = ClapModel.from_pretrained(self.model_id)
        processor = ClapProcessor.from_pretrained(self.model_id)
        model.eval()
        return model, processor

    @property
    def dim(self) -> int:
        model, _ = self._load()
        return int(model.config.projection_dim)

    def encode_audio(self, samples: np.ndarray, rate: int) -> np.ndarray:
        import torch

        model, processor = self._load()
        inputs = processor(
            audios=[np.asarray(samples, dtype=np.float32)],
            sampling_rate=rate,
            return_tensors="pt",
        )
        with torch.no_grad():
            emb = model.get_audio_features(**inputs)
        return emb[0].numpy().astype(np.float32)

    def encode_text(self, text: str) -> np.ndarray:
        import torch

        model, processor = self._load()
        inputs = processor(text=[text], return_tensors="pt", padding=True)
        with torch.no_grad():
            emb = model.get_text_features(**inputs)
        return emb[0].numpy().astype(np.float32)


def get_encoder(name: str, dim: int = 512):
    """Look up an encoder backend by identifier."""
    if name == "spectral":
        return SpectralEncoder(dim=dim)
    if name == "clap":
        return ClapEncoder()
    raise JobError(f"unknown encoder {name!r} (available: spectral, clap)")
