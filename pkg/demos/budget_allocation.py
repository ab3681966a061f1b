"""
Given a fixed draw budget, how should it be split between outer and inner?

The error has one term that shrinks with the outer count N and one that
shrinks with the inner count M, so at fixed T = N * M the best coupling
balances them: N proportional to M.  This script races three couplings
(N = sqrt(M), N = M, N = M^2) at the same budget with common random
numbers, so every policy sees the same replication noise and the ranking
reflects the allocation alone.

Equivalent CLI run:

    nestmc allocate --model gauss-log --T 65536 --reps 300 --seed 7 \
        --policies "tau:alpha=0.5,c=1;tau:alpha=1,c=1;tau:alpha=2,c=1"
"""

from nestmc import CATALOG, TauPower, compare_policies, make_root


def main():
    problem = CATALOG["gauss-log"]()
    policies = [TauPower(0.5, 1), TauPower(1, 1), TauPower(2, 1)]
    ranking = compare_policies(problem, 65536, policies, 300, make_root(7))

    print(f"model={ranking.model}  T={ranking.T}  reps={ranking.reps}")
    print(f"{'rank':>4} {'policy':<20} {'N':>6} {'M':>6} {'mse':>12} {'mse_se':>10}")
    for res in ranking.results:
        print(f"{res.rank:>4} {res.policy.name:<20} {res.N:>6} {res.M:>6} "
              f"{res.mse:>12.3e} {res.mse_se:>10.1e}")
    winner = ranking.results[0].policy
    print(f"lowest MSE: {winner.name}"
          + ("  (the balanced coupling)" if winner == TauPower(1, 1) else ""))


if __name__ == "__main__":
    main()
