from .ast import *  # noqa: F401,F403
from .ast import DIV_MONOID, DIVERGENCES, MD, SD, free_vars
from .context import add_ctx, ctx_leq, format_ctx, max_ctx, scale_ctx
from .parser import parse, parse_term, parse_type
from .printer import pretty, pretty_term, pretty_type
