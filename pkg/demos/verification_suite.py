"""
Running the built-in verification suite from Python
===================================================

`weakneutral verify` wraps this; calling it directly gives you the
CheckResult objects.  Two of the checks are red by construction: the
closed-form interface parameter is a small-|b1| approximation and its
dipole residual exceeds 5% once |b1| reaches 0.1.  Everything else is
expected green.
"""

import time

from weakneutral import acceptance_suite, write_report

t0 = time.perf_counter()
results = acceptance_suite(n=256, N=128, droplet_n=512)
dt = time.perf_counter() - t0

for r in results:
    tag = "PASS" if r.passed else "FAIL"
    print("%s %-34s %s %s %s" % (tag, r.name, r.value, r.op, r.tol))

n_fail = sum(not r.passed for r in results)
print("\n%d checks, %d failing, %.2f s" % (len(results), n_fail, dt))

write_report(results, "report_demo.json", parameters={"n": 256, "N": 128})
print("wrote report_demo.json")
