"""
The nested estimator is biased, and for one model we know the bias exactly.

Plugging a noisy M-sample inner average into a nonlinear outer function
shifts the estimate: for the quadratic integrand f(y, w) = (gamma(y) - w)^2
the true value is 0 while the estimator's expectation is exactly c/M, with
c the average conditional variance of the inner integrand.  No amount of
outer sampling removes it.  Flipping the integrand's sign negates every
estimate bitwise, so the bias direction is entirely integrand-driven.

Equivalent CLI runs:

    nestmc bias --model bias-quad-pos --N 1000 --Ms 2,4,8,16,32 --reps 400 --seed 7
    nestmc bias --model bias-quad-neg --N 1000 --Ms 2,4,8,16,32 --reps 400 --seed 7
"""

from nestmc import CATALOG, make_root, run_bias


def main():
    Ms = [2, 4, 8, 16, 32]
    pos = run_bias(CATALOG["bias-quad-pos"](), 1000, Ms, 400, make_root(7))
    neg = run_bias(CATALOG["bias-quad-neg"](), 1000, Ms, 400, make_root(7))

    print(f"{'M':>4} {'mean error':>12} {'predicted c/M':>14} {'se':>9} {'mirrored':>9}")
    for prow, nrow in zip(pos.rows, neg.rows):
        mirrored = nrow.mean_error == -prow.mean_error
        print(f"{prow.M:>4} {prow.mean_error:>12.4e} {prow.predicted:>14.4e} "
              f"{prow.se:>9.1e} {str(mirrored):>9}")
    print(f"fitted slope of log10 |mean error| vs log10 M: {pos.fit.slope:.3f}"
          " (theory: -1)")


if __name__ == "__main__":
    main()
