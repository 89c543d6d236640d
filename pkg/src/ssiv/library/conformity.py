"""The conformity relation between a ground-truth attribute and a credential."""
from __future__ import annotations

from ..ir import BOOL, EMPTY, NONE, Const, Expr, Op, STRING


def conformity_atom(truth: Expr, vc: Expr) -> Expr:
    """Clause stating that `truth` conforms to the data carried by `vc`.

    Credentials are sets of claims: the attribute conforms when the credential
    is still empty or carries it.  A string-valued credential slot conforms
    when it is unset (``"NONE"``) or equal to the truth value.
    """
    if vc.type.kind == "set":
        return Op("or", (Op("eq", (vc, EMPTY), BOOL), Op("in", (truth, vc), BOOL)), BOOL)
    return Op("or", (Op("eq", (vc, Const(NONE, STRING)), BOOL),
                     Op("eq", (vc, truth), BOOL)), BOOL)
