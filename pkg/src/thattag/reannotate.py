"""Relabel postnominal "that" as WPR (relative pronoun) or CST
(complementizer) in the XPOS column, and derive corpus-level statistics.

The two rules read only the token's deprel and its head's deprel:

  WPR: "that" is a clause-internal argument (nsubj, nsubj:pass, obj, obl)
       of a head attached as acl:relcl -- "the book that I read".
  CST: "that" attaches as mark to a head attached as acl or ccomp -- noun
       complement clauses ("the fact that she left") and verbal
       complements ("she believes that he is honest").

Determiner, demonstrative-pronoun, and adverbial uses match neither rule
and are left untouched.  The deprel sets are disjoint, so no token can
ever receive both tags.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace

log = logging.getLogger(__name__)

TARGET_FORM = "that"
WPR = "WPR"
CST = "CST"

WPR_THAT_DEPRELS = frozenset({"nsubj", "nsubj:pass", "obj", "obl"})
WPR_HEAD_DEPREL = "acl:relcl"
CST_THAT_DEPREL = "mark"
CST_HEAD_DEPRELS = frozenset({"acl", "ccomp"})

ACL_DEPRELS = frozenset({"acl", "acl:relcl"})


@dataclass(frozen=True)
class Edit:
    token_id: int
    old_xpos: str
    new_tag: str
    rule: str


@dataclass(frozen=True)
class ReannotationOutcome:
    sentence: object  # post-edit Sentence
    edits: list
    doc_id: str = ""

    def tags(self):
        return {edit.new_tag for edit in self.edits}


@dataclass(frozen=True)
class CorpusStats:
    total_that: int
    reannotated_total: int
    cst_count: int
    wpr_count: int
    acl_relcl_verbs_without_that: int
    acl_left_to_right_fraction: float | None
    acl_mean_parent_child_distance: float | None
    acl_pos_pair_fractions: dict

    def to_json_dict(self):
        return {
            "total_that": self.total_that,
            "reannotated_total": self.reannotated_total,
            "cst_count": self.cst_count,
            "wpr_count": self.wpr_count,
            "acl_relcl_verbs_without_that": self.acl_relcl_verbs_without_that,
            "acl_left_to_right_fraction": self.acl_left_to_right_fraction,
            "acl_mean_parent_child_distance": self.acl_mean_parent_child_distance,
            "acl_pos_pair_fractions": {f"{head}-{child}": v for (head, child), v in sorted(self.acl_pos_pair_fractions.items())},
        }


def match_rule(sentence, token):
    """Return WPR, CST, or None for one token (None for non-"that" tokens,
    headless tokens, and tokens matching neither rule)."""
    if token.form.lower() != TARGET_FORM:
        return None
    if token.head <= 0:
        return None
    if token.head > len(sentence.tokens):
        log.warning("sentence %s: token %d head %d dangles, skipped", sentence.sent_id, token.id, token.head)
        return None
    head = sentence.tokens[token.head - 1]
    if token.deprel in WPR_THAT_DEPRELS and head.deprel == WPR_HEAD_DEPREL:
        return WPR
    if token.deprel == CST_THAT_DEPREL and head.deprel in CST_HEAD_DEPRELS:
        return CST
    return None


def reannotate_that(sentence, doc_id=""):
    """Apply both rules to one sentence; returns the edited sentence plus
    the list of edits (possibly empty).  Tokens other than "that" are
    never modified."""
    edits = []
    new_tokens = []
    for token in sentence.tokens:
        tag = match_rule(sentence, token)
        if tag is None:
            new_tokens.append(token)
        else:
            edits.append(Edit(token_id=token.id, old_xpos=token.xpos, new_tag=tag,
                              rule=f"{tag}-rule"))
            new_tokens.append(replace(token, xpos=tag))
    if not edits:
        return ReannotationOutcome(sentence=sentence, edits=[], doc_id=doc_id)
    return ReannotationOutcome(sentence=replace(sentence, tokens=new_tokens), edits=edits, doc_id=doc_id)


def reannotate_corpus(corpus):
    """Reannotate every sentence; returns (edited corpus, outcomes).

    Outcomes cover only sentences with at least one edit, in document
    order.  The operation is a pure function of the corpus.
    """
    from .conllu import Corpus, Document

    outcomes = []
    documents = []
    for doc in corpus.documents:
        sentences = []
        for sentence in doc.sentences:
            outcome = reannotate_that(sentence, doc.doc_id)
            sentences.append(outcome.sentence)
            if outcome.edits:
                outcomes.append(outcome)
        documents.append(Document(doc_id=doc.doc_id, sentences=sentences))
    return Corpus(documents=documents), outcomes


def partition_outcomes(outcomes):
    """Split outcomes into (wpr, cst) lists; a sentence carrying both kinds
    of edit appears in both."""
    wpr = [o for o in outcomes if WPR in o.tags()]
    cst = [o for o in outcomes if CST in o.tags()]
    return wpr, cst


def compute_stats(corpus, outcomes):
    """Count "that" occurrences, reannotations, and acl-relation shape.

    acl statistics cover deprels acl and acl:relcl.  Left-to-right means
    the head position is smaller than the dependent position; distance is
    the absolute difference of the two positions.  A head is counted under
    acl_relcl_verbs_without_that when no direct dependent is "that".
    Fractions are None (and the pair map empty) on a corpus without acl
    relations.
    """
    total_that = 0
    acl_ltr = 0
    acl_total = 0
    acl_distance_sum = 0
    acl_pairs = Counter()
    relcl_without_that = 0

    for _, sentence in corpus.iter_sentences():
        n = len(sentence.tokens)
        for token in sentence.tokens:
            if token.form.lower() == TARGET_FORM:
                total_that += 1
            if token.deprel in ACL_DEPRELS and 1 <= token.head <= n and token.head != token.id:
                head = sentence.tokens[token.head - 1]
                acl_total += 1
                if token.head < token.id:
                    acl_ltr += 1
                acl_distance_sum += abs(token.head - token.id)
                acl_pairs[(head.upos, token.upos)] += 1
            if token.deprel == "acl:relcl":
                has_that = any(dep.head == token.id and dep.form.lower() == TARGET_FORM
                               for dep in sentence.tokens)
                if not has_that:
                    relcl_without_that += 1

    wpr_count = sum(1 for o in outcomes for e in o.edits if e.new_tag == WPR)
    cst_count = sum(1 for o in outcomes for e in o.edits if e.new_tag == CST)

    if acl_total:
        ltr_fraction = acl_ltr / acl_total
        mean_distance = acl_distance_sum / acl_total
        pair_fractions = {pair: count / acl_total for pair, count in acl_pairs.items()}
    else:
        ltr_fraction = None
        mean_distance = None
        pair_fractions = {}

    return CorpusStats(
        total_that=total_that,
        reannotated_total=wpr_count + cst_count,
        cst_count=cst_count,
        wpr_count=wpr_count,
        acl_relcl_verbs_without_that=relcl_without_that,
        acl_left_to_right_fraction=ltr_fraction,
        acl_mean_parent_child_distance=mean_distance,
        acl_pos_pair_fractions=pair_fractions,
    )


def _render_sentence(outcome, tag):
    edited = {e.token_id for e in outcome.edits if e.new_tag == tag}
    words = []
    for token in outcome.sentence.tokens:
        words.append(f"[{token.form}]" if token.id in edited else token.form)
    return " ".join(words)


def display_outcomes(outcomes, limit=10):
    """Human-readable listing: a WPR block then a CST block, sentences
    numbered from 0, the relabeled token in brackets.  `limit` caps each
    block."""
    wpr, cst = partition_outcomes(outcomes)
    lines = []
    for tag, block in ((WPR, wpr), (CST, cst)):
        lines.append(f"{tag} " + "-" * 100)
        for n, outcome in enumerate(block[:limit]):
            lines.append(f"{n} {_render_sentence(outcome, tag)}")
            lines.append("")
    return "\n".join(lines) + "\n"


def edits_tsv(outcomes):
    """One row per edit: doc_id, sent_id, token_id, old_xpos, new_tag, rule."""
    lines = ["doc_id\tsent_id\ttoken_id\told_xpos\tnew_tag\trule"]
    for outcome in outcomes:
        for edit in outcome.edits:
            lines.append("\t".join([
                outcome.doc_id,
                outcome.sentence.sent_id,
                str(edit.token_id),
                edit.old_xpos,
                edit.new_tag,
                edit.rule,
            ]))
    return "\n".join(lines) + "\n"
