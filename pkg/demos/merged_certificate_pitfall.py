"""Why the certificate also checks every term, not only the merged running cost.

Two "always" constraints hold at the same steps. Their weighted costs are
merged with the smooth maximum, which is a softmax-weighted *mean*: a small
violation can hide behind a comfortable margin.

    python3 demos/merged_certificate_pitfall.py
"""

import numpy as np

from stlddp.costgen import check_soundness, compile
from stlddp.smoothing import SmoothParams
from stlddp.stl import AffinePredicate, parse_spec

preds = {"a": AffinePredicate("a", [1.0], 0.0),      # y >= 0
         "c": AffinePredicate("c", [1.0], 0.11)}     # y >= 0.11
table = compile(parse_spec("G[0,1] a & G[0,1] c", 1, preds))
Y = np.array([[0.1], [0.1]])  # satisfies a by 0.1, violates c by 0.01
params = SmoothParams(10, 10)

merged_only = check_soundness(table, Y, params, per_term=False)
per_term = check_soundness(table, Y, params)

print("margins l_t:", np.round(merged_only.margins, 4))
print(f"exact robustness: {merged_only.exact_robustness:.4f}")
print(f"merged-only check: {merged_only.verdict}  (agrees with exact semantics: {merged_only.sound})")
print(f"per-term check:    {per_term.verdict}  offending steps {list(per_term.offending)}")
