"""Token-per-row training files, "first n documents" grouping, and
frequency lexicons.

Token-per-row format: one "form<TAB>tag" line per token, a blank line
after each sentence.  Lexicon format: "form<TAB>tag<TAB>count" lines,
sorted by form then descending count.  Files taken "first n" are always
in lexicographic filename order so the grouping is platform-independent.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ThattagError
from .ioutil import atomic_write_text

DEFAULT_OPEN_CLASS_MIN_FORMS = 10


class MissingTag(ThattagError):
    """A token without a usable tag cannot become a training row."""


@dataclass
class TrainingFile:
    rows: list = field(default_factory=list)  # (form, tag) pairs
    sentence_breaks: list = field(default_factory=list)  # row count after each sentence

    def sentences(self):
        start = 0
        for stop in self.sentence_breaks:
            yield self.rows[start:stop]
            start = stop

    def __len__(self):
        return len(self.rows)


@dataclass
class Lexicon:
    entries: dict  # form -> [(tag, count)] sorted by descending count, then tag
    open_class_tags: list

    def total_count(self):
        return sum(count for tags in self.entries.values() for _, count in tags)

    def form_count(self, form):
        return sum(count for _, count in self.entries.get(form, []))

    def tags(self):
        return sorted({tag for tags in self.entries.values() for tag, _ in tags})


def token_file_text(sentences):
    """Render [(form, tag)] sentences as token-per-row text."""
    lines = []
    for sentence in sentences:
        for form, tag in sentence:
            lines.append(f"{form}\t{tag}")
        lines.append("")
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def read_token_file(path):
    """Load a token-per-row file into a TrainingFile."""
    training = TrainingFile()
    pending = False
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        line = raw.rstrip("\r")
        if not line:
            if pending:
                training.sentence_breaks.append(len(training.rows))
                pending = False
            continue
        form, _, tag = line.partition("\t")
        training.rows.append((form, tag))
        pending = True
    if pending:
        training.sentence_breaks.append(len(training.rows))
    return training


def export_token_per_row(corpus, out_dir):
    """Write one `<doc_id>.txt` token-per-row file per document.

    Raises MissingTag as soon as any token carries XPOS "_" (or nothing):
    the tagger cannot train on untagged rows.  Returns the file count.
    """
    out_dir = Path(out_dir)
    count = 0
    for doc in corpus.documents:
        sentences = []
        for sentence in doc.sentences:
            rows = []
            for token in sentence.tokens:
                if token.xpos in ("", "_"):
                    raise MissingTag(
                        f"untagged token in {doc.doc_id}/{sentence.sent_id}: "
                        f"token {token.id} ({token.form!r})"
                    )
                rows.append((token.form, token.xpos))
            sentences.append(rows)
        atomic_write_text(out_dir / f"{doc.doc_id}.txt", token_file_text(sentences))
        count += 1
    return count


def concat_first_n(token_dir, n, out_path):
    """Concatenate the first n token files (lexicographic order) into one.

    Takes min(n, available) files; returns the number of token rows
    written.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    token_dir = Path(token_dir)
    parts = []
    taken = 0
    for path in sorted(token_dir.glob("*.txt"), key=lambda p: p.name):
        parts.append(path.read_text(encoding="utf-8"))
        taken += 1
        if taken == n:
            break
    text = "".join(parts)
    atomic_write_text(out_path, text)
    return sum(1 for line in text.split("\n") if line.strip())


def infer_open_class_tags(tag_to_forms, min_forms):
    """Tags observed with at least `min_forms` distinct forms, sorted."""
    return sorted(tag for tag, forms in tag_to_forms.items() if len(forms) >= min_forms)


def build_lexicon(training, open_class_min_forms=DEFAULT_OPEN_CLASS_MIN_FORMS,
                  open_class_tags=None):
    """Aggregate (form, tag) counts over all training rows.

    Forms are kept case-sensitive with no merged variants, so the total
    count over all entries equals the row count exactly.  Unless an
    explicit open-class list is given, a tag is open-class when it was
    seen with at least `open_class_min_forms` distinct forms.
    """
    if not training.rows:
        raise ValueError("training file is empty")
    counts = Counter(training.rows)
    tag_to_forms = defaultdict(set)
    for (form, tag), _ in counts.items():
        tag_to_forms[tag].add(form)

    entries = defaultdict(list)
    for (form, tag), count in counts.items():
        entries[form].append((tag, count))
    for form in entries:
        entries[form].sort(key=lambda item: (-item[1], item[0]))

    if open_class_tags is None:
        open_class = infer_open_class_tags(tag_to_forms, open_class_min_forms)
    else:
        open_class = sorted(set(open_class_tags))
    return Lexicon(entries=dict(entries), open_class_tags=open_class)


def lexicon_text(lexicon):
    lines = []
    for form in sorted(lexicon.entries):
        for tag, count in lexicon.entries[form]:
            lines.append(f"{form}\t{tag}\t{count}")
    return "\n".join(lines) + "\n" if lines else ""


def save_lexicon(lexicon, path):
    atomic_write_text(path, lexicon_text(lexicon))


def load_lexicon(path, open_class_min_forms=DEFAULT_OPEN_CLASS_MIN_FORMS,
                 open_class_tags=None):
    """Read a lexicon file back; the open-class list is re-derived (or
    taken from `open_class_tags`) since the file stores only counts."""
    entries = defaultdict(list)
    tag_to_forms = defaultdict(set)
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}: line {line_no}: expected form<TAB>tag<TAB>count")
        form, tag, count = fields
        entries[form].append((tag, int(count)))
        tag_to_forms[tag].add(form)
    for form in entries:
        entries[form].sort(key=lambda item: (-item[1], item[0]))
    if open_class_tags is None:
        open_class = infer_open_class_tags(tag_to_forms, open_class_min_forms)
    else:
        open_class = sorted(set(open_class_tags))
    return Lexicon(entries=dict(entries), open_class_tags=open_class)


def read_open_class_file(path):
    """One tag per line; blank lines ignored.  An empty file yields an
    empty open-class set (every unknown word then falls back to the full
    suffix distribution)."""
    tags = []
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        line = raw.strip()
        if line:
            tags.append(line)
    return tags
