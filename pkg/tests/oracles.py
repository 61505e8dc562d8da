"""Independent reference constructions used only by the tests."""
import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_string(letters):
    """Dense matrix of a Pauli string; qubit 0 is the least significant bit."""
    out = np.array([[1.0 + 0j]])
    for letter in letters:
        # later qubits are more significant, so they go to the left
        out = np.kron(LETTER[letter], out)
    return out


def dense(pairs, n):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for letters, coeff in pairs:
        out += coeff * kron_string(letters)
    return out


def heisenberg_dense(n, jz, jx, bonds):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for i, j in bonds:
        zz = ["I"] * n
        zz[i] = zz[j] = "Z"
        xx = ["I"] * n
        xx[i] = xx[j] = "X"
        out += -0.5 * jz * kron_string(zz) - 0.5 * jx * kron_string(xx)
    return out


def ring_bonds(n):
    return sorted({tuple(sorted((i, (i + 1) % n))) for i in range(n)})


def expm_hermitian(h, t):
    w, u = np.linalg.eigh(h)
    return u @ np.diag(np.exp(-1j * t * w)) @ u.conj().T


def phase_aligned_distance(a, b):
    ov = np.vdot(a, b)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a * phase - b))
