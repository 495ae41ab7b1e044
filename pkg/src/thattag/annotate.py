"""Client for a UDPipe-compatible REST service, plus a resumable batch mode.

The service takes a form-encoded POST with fields data/model/tokenizer/
tagger/parser ("yes" enables a component) and answers JSON whose "result"
member holds CoNLL-U.  With the literal endpoint "offline" the batch mode
skips the network entirely and copies pre-annotated .conllu files from the
input directory instead, validating them on the way; CI never needs the
live service.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import requests

from .conllu import MalformedRow, parse_conllu
from .errors import ThattagError
from .ioutil import atomic_write_text

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://lindat.mff.cuni.cz/services/udpipe/api/process"
OFFLINE_ENDPOINT = "offline"

# The public service is shared infrastructure; stay well under 2 req/s.
MIN_REQUEST_INTERVAL = 0.5


class ServiceError(ThattagError):
    """Non-200 answer from the annotation service."""

    def __init__(self, status, body_excerpt=""):
        super().__init__(f"UDPipe API Error: {status}, {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class TransportError(ThattagError):
    """Network-level failure before any HTTP status was received."""


@dataclass(frozen=True)
class AnnotateRequest:
    data: str
    model: str = "english-ewt"
    tokenizer: bool = True
    tagger: bool = True
    parser: bool = True


@dataclass(frozen=True)
class AnnotateResponse:
    conllu: str
    status: int
    service_message: str = ""


@dataclass
class BatchSummary:
    files_done: int = 0
    files_failed: list = field(default_factory=list)
    files_skipped: int = 0


def annotate_text(req, endpoint=DEFAULT_ENDPOINT):
    """Send one annotation request; returns AnnotateResponse on HTTP 200.

    Raises ValueError before sending when the request is invalid,
    ServiceError on a non-200 status, TransportError on network failure.
    Both error kinds are safe to retry.
    """
    if not req.data:
        raise ValueError("request data must be non-empty")
    if not req.model:
        raise ValueError("request model must be non-empty")
    payload = {"data": req.data, "model": req.model}
    for name, enabled in (("tokenizer", req.tokenizer), ("tagger", req.tagger), ("parser", req.parser)):
        if enabled:
            payload[name] = "yes"
    try:
        response = requests.post(endpoint, data=payload, timeout=120)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if response.status_code != 200:
        raise ServiceError(response.status_code, response.text[:200])
    return AnnotateResponse(conllu=response.json()["result"], status=response.status_code)


def annotate_directory(input_dir, output_dir, req_template, endpoint=DEFAULT_ENDPOINT,
                       min_interval=MIN_REQUEST_INTERVAL):
    """Annotate every input file into `<name>.conllu` under output_dir.

    Remote mode reads .txt files; offline mode reads .conllu files and
    copies them after validation.  Existing outputs are skipped, so an
    interrupted batch can simply be rerun.  Per-file failures are recorded
    in the summary instead of aborting the batch; every output is written
    atomically.
    """
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    offline = endpoint == OFFLINE_ENDPOINT
    pattern = "*.conllu" if offline else "*.txt"
    summary = BatchSummary()
    last_request = None

    for path in sorted(input_dir.glob(pattern), key=lambda p: p.name):
        out_path = output_dir / (path.stem + ".conllu")
        if out_path.exists():
            summary.files_skipped += 1
            continue
        try:
            if offline:
                text = path.read_text(encoding="utf-8")
                parse_conllu(text, path.stem)  # reject unparseable input early
                conllu_text = text
            else:
                if last_request is not None:
                    wait = min_interval - (time.monotonic() - last_request)
                    if wait > 0:
                        time.sleep(wait)
                last_request = time.monotonic()
                response = annotate_text(replace(req_template, data=path.read_text(encoding="utf-8")), endpoint)
                parse_conllu(response.conllu, path.stem)
                conllu_text = response.conllu
            atomic_write_text(out_path, conllu_text)
            summary.files_done += 1
        except (ServiceError, TransportError, MalformedRow, ValueError) as exc:
            log.warning("annotation failed for %s: %s", path.name, exc)
            summary.files_failed.append(path.name)
    return summary
