"""Command-line tool: audio and text extraction jobs.

``embext extract-audio`` encodes the audio files listed in a job file
(same line-delimited JSON style as the consumer's manifests) into an
EMB1 embedding file plus aligned manifest. ``embext extract-text``
encodes one prompt per class into a zero-shot prototype file with its
class-order sidecar.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import JobError
from .extract import extract_audio, extract_text_prototypes
from .jobfile import ExtractionJob, read_job_lines, read_prompts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embext",
        description="Encode audio files and text prompts into embedding files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-audio", help="job file -> EMB1 + manifest")
    p.add_argument("--jobs", required=True, help="line-delimited job file")
    p.add_argument("--encoder", default="clap", help="spectral | clap")
    p.add_argument("--dim", type=int, default=512,
                   help="output width (spectral encoder only)")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out-embeddings", required=True)
    p.add_argument("--out-manifest", required=True)
    p.set_defaults(func=cmd_extract_audio)

    p = sub.add_parser("extract-text", help="prompts -> prototype EMB1 + sidecar")
    p.add_argument("--prompts", required=True,
                   help="line-delimited {class, prompt} file")
    p.add_argument("--jobs", default=None,
                   help="optional job file to validate prompt coverage against")
    p.add_argument("--encoder", default="clap", help="spectral | clap")
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--out-protos", required=True)
    p.set_defaults(func=cmd_extract_text)

    return parser


def cmd_extract_audio(args) -> int:
    items = read_job_lines(args.jobs)
    job = ExtractionJob(items=items, encoder=args.encoder,
                        batch_size=args.batch_size)
    written = extract_audio(job, args.out_embeddings, args.out_manifest,
                            dim=args.dim)
    print(f"wrote {written} of {len(items)} rows -> {args.out_embeddings}")
    return 0


def cmd_extract_text(args) -> int:
    prompts = read_prompts(args.prompts)
    items = read_job_lines(args.jobs) if args.jobs else ()
    job = ExtractionJob(items=items, encoder=args.encoder, prompts=prompts)
    written = extract_text_prototypes(job, args.out_protos, dim=args.dim)
    print(f"wrote {written} prototypes -> {args.out_protos}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
        return args.func(args)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
