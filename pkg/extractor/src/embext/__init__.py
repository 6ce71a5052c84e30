"""Audio-to-embedding extraction for the protoshot toolkit.

Runs an audio-text embedding encoder over audio files and text prompts
and writes the toolkit's file formats: EMB1 embedding matrices,
line-delimited manifests, and prototype files with class-order
sidecars. The toolkit itself is consumed only through those formats.
"""

from .emb1 import read_emb1, write_emb1
from .encoders import get_encoder
from .errors import JobError
from .extract import extract_audio, extract_text_prototypes
from .jobfile import ExtractionJob, read_job_lines, read_prompts

__version__ = "0.1.0"
