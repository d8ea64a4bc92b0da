"""Running the statistical checks
==============================

Each check returns a report with estimates, standard errors and a
pass/fail decision.  Negative controls plant a bug and must fail.
"""
# %%
from ellipslice.verify import DEFAULT_SUITE, run_test, summarize

# %%
quick = {"q_detailed_balance": dict(n=10**5), "q_psd": dict(n=10**5), "rotation_invariance": dict(n=2 * 10**4),
         "termination_tail": dict(n=10**4), "anchor_conditional": dict(n=10**5)}
reports = [run_test(name, seed=0, **params) for name, params in quick.items()]
for r in reports:
    print(r.line())
print(summarize(reports)["overall"])

# %% [markdown]
# With fault injection the detailed-balance check uses a case split that
# ignores wrap-around, and the rotation check feeds uniform inputs.

# %%
for name in ("q_detailed_balance", "rotation_invariance"):
    r = run_test(name, fault_injection=True, **quick[name])
    print(r.line(), " fault:", r.details["fault"])

# %%
print("full default suite:", ", ".join(DEFAULT_SUITE))
doc = run_test("termination_tail")
print(doc.claim, "->", doc.decision)
print("report fields:", ", ".join(sorted(doc.to_dict(timing=False))))
