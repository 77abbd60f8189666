"""Parser for architecture strings such as ``G(62,128*2,4)`` or ``D(4,(42,43,43),1)``.

Grammar::

    arch    := ROLE "(" INT "," hidden "," INT ")"
    ROLE    := "G" | "D" | "F"          # generator, discriminator, FCN regressor
    hidden  := INT "*" INT              # width * number of layers
             | INT ("," INT)*           # explicit widths
             | "(" INT ("," INT)* ")"   # RBF-cluster sizes (D only)
"""
import re
from dataclasses import dataclass

from .errors import ArchitectureParseError

_TOKEN = re.compile(r"\s*(?:(\d+)|(.))", re.DOTALL)
ROLES = {"G": "generator", "D": "discriminator", "F": "regressor"}


@dataclass(frozen=True)
class ArchSpec:
    role: str
    input_dim: int
    hidden: tuple
    output_dim: int
    clusters: tuple = None
    text: str = ""

    @property
    def dims(self):
        return (self.input_dim, *self.hidden, self.output_dim)

    def format(self):
        if self.clusters:
            body = "(" + ",".join(map(str, self.clusters)) + ")"
        elif len(set(self.hidden)) == 1:
            body = f"{self.hidden[0]}*{len(self.hidden)}"
        else:
            body = ",".join(map(str, self.hidden))
        return f"{self.role}({self.input_dim},{body},{self.output_dim})"


def _tokens(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m.group(0).strip() == "":
            break
        start = m.start(1) if m.group(1) else m.start(2)
        out.append((m.group(1) and int(m.group(1)), m.group(2), start))
        pos = m.end()
    out.append((None, "$", len(text)))
    return out


def parse_architecture(text):
    toks = _tokens(text)
    i = 0

    def peek():
        return toks[i]

    def fail(msg, tok=None):
        tok = tok or peek()
        raise ArchitectureParseError(msg, text, tok[2])

    def expect(ch):
        nonlocal i
        if peek()[1] != ch:
            fail(f"expected {ch!r}")
        i += 1

    def integer():
        nonlocal i
        num, _, _ = peek()
        if num is None:
            fail("expected a positive integer")
        if num < 1:
            fail("dimensions must be positive")
        i += 1
        return num

    role_tok = peek()
    if role_tok[1] not in ROLES:
        fail("expected role letter G, D or F")
    role = role_tok[1]
    i += 1
    expect("(")
    n_in = integer()
    expect(",")
    items = []  # ("int", n, pos) | ("rep", h, k) | ("group", sizes)
    while True:
        tok = peek()
        if tok[1] == "(":
            if role != "D":
                fail("cluster groups are only valid for discriminators")
            i += 1
            sizes = [integer()]
            while peek()[1] == ",":
                i += 1
                sizes.append(integer())
            expect(")")
            items.append(("group", tuple(sizes), tok))
        else:
            n = integer()
            if peek()[1] == "*":
                i += 1
                items.append(("rep", (n, integer()), tok))
            else:
                items.append(("int", n, tok))
        if peek()[1] == ",":
            i += 1
            continue
        break
    expect(")")
    if peek()[1] != "$":
        fail("unexpected trailing characters")
    if len(items) < 2:
        fail("need hidden layers and an output dimension", items[-1][2] if items else None)
    out_item = items[-1]
    if out_item[0] != "int":
        fail("output dimension must be a plain integer", out_item[2])
    middle = items[:-1]
    clusters = None
    kinds = {it[0] for it in middle}
    if kinds == {"int"}:
        hidden = tuple(it[1] for it in middle)
    elif len(middle) == 1 and middle[0][0] == "rep":
        h, k = middle[0][1]
        hidden = (h,) * k
    elif len(middle) == 1 and middle[0][0] == "group":
        clusters = middle[0][1]
        if len(clusters) < 2:
            fail("a cluster group needs at least two clusters", middle[0][2])
        hidden = (sum(clusters),)
    else:
        fail("hidden part must be h*k, a width list, or one cluster group", middle[0][2])
    spec = ArchSpec(role, n_in, hidden, out_item[1], clusters, text.strip())
    if role == "D" and spec.output_dim != 1:
        fail("discriminator output dimension must be 1", out_item[2])
    return spec
