from .rules import RULES, RewriteRule
from .simplify import RewriteLimit, is_normal, merge_terms, normalize_term, simplify, simplify_with_trace

__all__ = ["RULES", "RewriteRule", "RewriteLimit", "is_normal", "merge_terms", "normalize_term", "simplify",
           "simplify_with_trace"]
