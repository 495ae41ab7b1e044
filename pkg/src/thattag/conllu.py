"""CoNLL-U reading, validation, and writing.

Token rows carry the ten tab-separated columns ID FORM LEMMA UPOS XPOS
FEATS HEAD DEPREL DEPS MISC, comments start with "#", and a blank line
terminates each sentence.  Multiword-token ranges (id "3-4") and empty
nodes (id "3.1") are dropped on input with a recorded warning; everything
kept in memory round-trips byte-for-byte (LF endings, one trailing blank
line).  Only ID/HEAD are converted to integers and FEATS to a mapping;
the remaining columns stay verbatim strings, "_" included, so unrelated
annotations survive a reannotation pass untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ThattagError

N_COLUMNS = 10

_RANGE_ID = re.compile(r"^\d+-\d+$")
_EMPTY_NODE_ID = re.compile(r"^\d+\.\d+$")
_PLAIN_ID = re.compile(r"^\d+$")
_SENT_ID_COMMENT = re.compile(r"^#\s*sent_id\s*=\s*(.+)$")
_TEXT_COMMENT = re.compile(r"^#\s*text\s*=\s*(.*)$")


class MalformedRow(ThattagError):
    """Unusable token row (or unusable sentence); carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CorpusLoadError(ThattagError):
    """A file in a corpus directory failed to parse."""

    def __init__(self, filename, cause):
        super().__init__(f"{filename}: {cause}")
        self.filename = filename
        self.cause = cause


@dataclass(frozen=True)
class ParseWarning:
    doc_id: str
    line_no: int
    message: str


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: dict
    head: int
    deprel: str
    deps: str
    misc: str


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    text: str
    tokens: list
    comments: list

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: list


@dataclass(frozen=True)
class Corpus:
    documents: list

    @property
    def source_order(self):
        return [doc.doc_id for doc in self.documents]

    def iter_sentences(self):
        for doc in self.documents:
            for sentence in doc.sentences:
                yield doc.doc_id, sentence


def decode_feats(column, line_no=0):
    """Parse a FEATS column into a key->value dict ("_" -> empty dict)."""
    if column == "_":
        return {}
    feats = {}
    for item in column.split("|"):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise MalformedRow(line_no, f"bad feats item {item!r}")
        if key in feats:
            raise MalformedRow(line_no, f"duplicate feats key {key!r}")
        feats[key] = value
    return feats


def encode_feats(feats):
    """Inverse of decode_feats; keys sorted case-insensitively per UD convention."""
    if not feats:
        return "_"
    return "|".join(f"{k}={feats[k]}" for k in sorted(feats, key=lambda k: (k.lower(), k)))


def _parse_token_row(cols, line_no):
    id_col = cols[0]
    if not _PLAIN_ID.match(id_col):
        raise MalformedRow(line_no, f"bad token id {id_col!r}")
    token_id = int(id_col)
    if token_id < 1:
        raise MalformedRow(line_no, f"token id must be >= 1, got {token_id}")
    if not cols[1]:
        raise MalformedRow(line_no, "empty form")
    if not _PLAIN_ID.match(cols[6]):
        raise MalformedRow(line_no, f"bad head {cols[6]!r}")
    return Token(
        id=token_id,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        xpos=cols[4],
        feats=decode_feats(cols[5], line_no),
        head=int(cols[6]),
        deprel=cols[7],
        deps=cols[8],
        misc=cols[9],
    )


def _finish_sentence(doc_id, index, comments, rows, warning_sink):
    tokens = [tok for tok, _ in rows]
    for position, (tok, line_no) in enumerate(rows, start=1):
        if tok.id != position:
            raise MalformedRow(line_no, f"token ids not contiguous (expected {position}, got {tok.id})")

    sent_id = f"{doc_id}:{index}"
    text = None
    for comment in comments:
        m = _SENT_ID_COMMENT.match(comment)
        if m:
            sent_id = m.group(1).strip()
            continue
        m = _TEXT_COMMENT.match(comment)
        if m:
            text = m.group(1)
    if text is None:
        text = " ".join(tok.form for tok in tokens)

    first_line = rows[0][1] if rows else 0
    n = len(tokens)
    roots = sum(1 for tok in tokens if tok.head == 0)
    if roots != 1 and warning_sink is not None:
        warning_sink.append(ParseWarning(doc_id, first_line, f"sentence {sent_id}: {roots} roots"))
    if warning_sink is not None:
        for tok in tokens:
            if tok.head > n:
                warning_sink.append(
                    ParseWarning(doc_id, first_line, f"sentence {sent_id}: token {tok.id} head {tok.head} dangles")
                )
            elif tok.head == tok.id:
                warning_sink.append(
                    ParseWarning(doc_id, first_line, f"sentence {sent_id}: token {tok.id} is its own head")
                )
    return Sentence(sent_id=sent_id, text=text, tokens=tokens, comments=list(comments))


def parse_conllu(text, doc_id="doc", warning_sink=None):
    """Parse CoNLL-U text into a list of Sentence objects.

    Range and empty-node rows are skipped (one ParseWarning each when a
    warning_sink list is supplied); anything else that cannot be read
    raises MalformedRow with its line number.  Empty input yields [].
    """
    sentences = []
    comments = []
    rows = []  # (Token, line_no)
    saw_content = False

    lines = text.split("\n")
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if line == "":
            if rows or comments:
                sentences.append(_finish_sentence(doc_id, len(sentences), comments, rows, warning_sink))
                comments, rows = [], []
            continue
        saw_content = True
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise MalformedRow(line_no, f"expected {N_COLUMNS} columns, got {len(cols)}")
        id_col = cols[0]
        if _RANGE_ID.match(id_col):
            if warning_sink is not None:
                warning_sink.append(ParseWarning(doc_id, line_no, f"skipped multiword range {id_col}"))
            continue
        if _EMPTY_NODE_ID.match(id_col):
            if warning_sink is not None:
                warning_sink.append(ParseWarning(doc_id, line_no, f"skipped empty node {id_col}"))
            continue
        rows.append((_parse_token_row(cols, line_no), line_no))

    if rows or comments:
        sentences.append(_finish_sentence(doc_id, len(sentences), comments, rows, warning_sink))
    if not saw_content:
        return []
    return sentences


def serialize_token(token):
    return "\t".join(
        [
            str(token.id),
            token.form,
            token.lemma,
            token.upos,
            token.xpos,
            encode_feats(token.feats),
            str(token.head),
            token.deprel,
            token.deps,
            token.misc,
        ]
    )


def serialize_conllu(sentences):
    """Render sentences back to CoNLL-U: comments, rows, one blank line each."""
    parts = []
    for sentence in sentences:
        parts.extend(sentence.comments)
        parts.extend(serialize_token(tok) for tok in sentence.tokens)
        parts.append("")
    if not parts:
        return ""
    return "\n".join(parts) + "\n"


def validate_sentence(sentence):
    """Return a list of invariant violations (empty when well formed)."""
    problems = []
    n = len(sentence.tokens)
    for position, tok in enumerate(sentence.tokens, start=1):
        if tok.id != position:
            problems.append(f"token ids not contiguous at position {position}")
        if not tok.form:
            problems.append(f"token {tok.id} has empty form")
        if tok.head < 0 or tok.head > n:
            problems.append(f"token {tok.id} head {tok.head} out of range")
        if tok.head == tok.id:
            problems.append(f"token {tok.id} is its own head")
    roots = sum(1 for tok in sentence.tokens if tok.head == 0)
    if roots != 1:
        problems.append(f"{roots} roots")
    return problems


def load_corpus(directory, pattern="*.conllu", warning_sink=None):
    """Load every file matching `pattern` (lexicographic filename order).

    doc_id is the filename without extension.  A file that fails to parse
    aborts the load with CorpusLoadError naming the file.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    documents = []
    seen = set()
    for path in sorted(directory.glob(pattern), key=lambda p: p.name):
        doc_id = path.stem
        if doc_id in seen:
            raise CorpusLoadError(path.name, f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        try:
            sentences = parse_conllu(path.read_text(encoding="utf-8"), doc_id, warning_sink)
        except MalformedRow as exc:
            raise CorpusLoadError(path.name, exc) from exc
        documents.append(Document(doc_id=doc_id, sentences=sentences))
    return Corpus(documents=documents)


def save_corpus(corpus, directory):
    """Write one `<doc_id>.conllu` per document (atomic per file)."""
    from .ioutil import atomic_write_text

    directory = Path(directory)
    for doc in corpus.documents:
        atomic_write_text(directory / f"{doc.doc_id}.conllu", serialize_conllu(doc.sentences))
    return len(corpus.documents)
