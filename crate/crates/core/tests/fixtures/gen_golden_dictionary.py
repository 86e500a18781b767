"""Reference CBM dictionary via an off-the-shelf conic solver (cvxpy + Clarabel).

Writes golden_dictionary.txt in the dictionary text format. Run once; the
output is checked in and compared against by the Rust beam designer tests.
"""
import numpy as np
import cvxpy as cp

M = 10
SPACING = 0.5
THETA_T = 0.0
THETA_C = -50.0
STEP = 0.5
SLL_DB = [-25.0, -30.0]
PHASES = [0.0, np.pi]


def steer(theta_deg):
    m = np.arange(M)
    return np.exp(-2j * np.pi * m * SPACING * np.sin(np.deg2rad(theta_deg)))


def grid():
    left = np.arange(-90.0, -5.0 + 1e-9, STEP)
    right = np.arange(5.0, 90.0 + 1e-9, STEP)
    return np.concatenate([left, right])


def design(delta, phi):
    thetas = grid()
    A = np.stack([steer(t) for t in thetas], axis=1)  # M x G
    w = cp.Variable(M, complex=True)
    t = cp.Variable()
    cons = [cp.abs(A.conj().T @ w) <= t,
            steer(THETA_T).conj() @ w == 1.0,
            steer(THETA_C).conj() @ w == delta * np.exp(-1j * phi)]
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    wv = w.value
    psl = np.max(np.abs(A.conj().T @ wv))
    return wv, psl


def main():
    lines = ["# cbm-dictionary", "# reference: cvxpy/clarabel epigraph solve, grid step 0.5 deg",
             f"# elements={M} spacing={SPACING} theta_t={THETA_T} theta_c={THETA_C}"]
    k = 0
    for sll in SLL_DB:
        for phi in PHASES:
            w, psl = design(10 ** (sll / 20), phi)
            lines.append(f"{k} {sll:.16e} {phi:.16e} {20*np.log10(psl):.16e}")
            for z in w:
                lines.append(f"{z.real:.16e} {z.imag:.16e}")
            print(k, sll, phi, 20 * np.log10(psl))
            k += 1
    with open("golden_dictionary.txt", "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
