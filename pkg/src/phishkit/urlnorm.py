"""URL normalization, decomposition, and registrable-domain lookup.

Every downstream stage (features, character encoding, dataset grouping)
consumes the ``ParsedUrl`` produced here, so normalization is deliberately
simple and deterministic: lowercase everything, default the scheme to
"http", split on the first "://", "#", "?", "/" delimiters, and pull a
trailing ":<digits>" off the authority as the port.  Userinfo is *not*
split out ("@" stays in the host string) and percent-escapes are left
encoded; both carry signal for the feature extractor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .errors import MalformedUrl

_PORT_RE = re.compile(r":(\d+)$")


@dataclass(frozen=True)
class ParsedUrl:
    """Decomposed, normalized URL.

    ``normalized`` is the canonical reassembly; parsing it again yields an
    equal ParsedUrl.  ``query`` and ``fragment`` carry no leading "?"/"#".
    """

    scheme: str
    host: str
    explicit_port: int | None
    path: str
    query: str
    fragment: str
    normalized: str


def normalize_url(raw: str) -> ParsedUrl:
    """Normalize a raw URL string into its canonical decomposed form.

    Trims surrounding whitespace, lowercases the whole string and prepends
    "http://" when no scheme is present.  Raises MalformedUrl when no host
    can be derived, the scheme is not http/https, or an explicit port lies
    outside 1..65535.
    """
    s = raw.strip().lower()
    if not s:
        raise MalformedUrl("empty URL")

    if "://" in s:
        scheme, rest = s.split("://", 1)
    else:
        scheme, rest = "http", s
    if scheme not in ("http", "https"):
        raise MalformedUrl(f"unsupported scheme {scheme!r}")

    rest, _, fragment = rest.partition("#")
    rest, _, query = rest.partition("?")
    slash = rest.find("/")
    if slash >= 0:
        authority, path = rest[:slash], rest[slash:]
    else:
        authority, path = rest, ""

    explicit_port = None
    m = _PORT_RE.search(authority)
    if m:
        explicit_port = int(m.group(1))
        if not 1 <= explicit_port <= 65535:
            raise MalformedUrl(f"port {explicit_port} out of range")
        authority = authority[: m.start()]

    if not authority:
        raise MalformedUrl(f"no host in {raw!r}")

    normalized = f"{scheme}://{authority}"
    if explicit_port is not None:
        normalized += f":{explicit_port}"
    normalized += path
    if query:
        normalized += f"?{query}"
    if fragment:
        normalized += f"#{fragment}"

    return ParsedUrl(
        scheme=scheme,
        host=authority,
        explicit_port=explicit_port,
        path=path,
        query=query,
        fragment=fragment,
        normalized=normalized,
    )


def is_ip_literal(host: str) -> bool:
    """True iff host is four dot-separated decimal octets, each 0..255."""
    parts = host.split(".")
    if len(parts) != 4:
        return False
    for p in parts:
        if not p or not p.isascii() or not p.isdigit():
            return False
        if int(p) > 255:
            return False
    return True


class PublicSuffixList:
    """Matcher over a public-suffix snapshot (one rule per line).

    Supports standard rule semantics: plain suffixes, wildcard rules
    ("*.ck"), exception rules ("!www.ck"), "//" comment lines, and the
    implicit default rule "*" for unlisted TLDs.
    """

    def __init__(self, rules: list[str]):
        self.exact: set[str] = set()
        self.wildcard: set[str] = set()  # stored without the "*." prefix
        self.exception: set[str] = set()
        for rule in rules:
            rule = rule.strip().lower()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self.exception.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcard.add(rule[2:])
            else:
                self.exact.add(rule)

    @classmethod
    def bundled(cls) -> "PublicSuffixList":
        text = (
            resources.files("phishkit.data")
            .joinpath("public_suffix_list.dat")
            .read_text(encoding="utf-8")
        )
        return cls(text.splitlines())

    def suffix_length(self, labels: list[str]) -> int:
        """Number of trailing labels that form the public suffix."""
        n = len(labels)
        best = 1  # implicit "*" rule: the bare TLD
        for i in range(n):
            tail = ".".join(labels[i:])
            if tail in self.exception:
                # exception rules win outright; the rule itself is the
                # registrable domain, so the suffix is one label shorter
                return (n - i) - 1
            if tail in self.exact:
                best = max(best, n - i)
            # "*.X" matches when the remainder after one starred label is X
            if i + 1 < n and ".".join(labels[i + 1:]) in self.wildcard:
                best = max(best, n - i)
        return best


_BUNDLED_PSL: PublicSuffixList | None = None


def _bundled_psl() -> PublicSuffixList:
    global _BUNDLED_PSL
    if _BUNDLED_PSL is None:
        _BUNDLED_PSL = PublicSuffixList.bundled()
    return _BUNDLED_PSL


def registrable_domain(p: ParsedUrl, psl: PublicSuffixList | None = None) -> str:
    """eTLD+1 of the host; IP literals and single labels pass through.

    Total on valid ParsedUrl: when the host is itself a public suffix the
    host is returned unchanged.
    """
    host = p.host
    if is_ip_literal(host):
        return host
    labels = [l for l in host.split(".") if l]
    if len(labels) <= 1:
        return host
    psl = psl or _bundled_psl()
    n_suffix = psl.suffix_length(labels)
    if n_suffix >= len(labels):
        return ".".join(labels)
    return ".".join(labels[-(n_suffix + 1):])
