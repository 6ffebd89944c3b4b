"""Recorded target forms the derivation pipeline checks itself against.

Each entry is the full text of a single-equation ``.hj`` file. The keys are
the stable anchor ids that DerivationTrace steps carry; a pipeline stage
whose anchor has an entry here must reproduce the recorded form up to a
nonzero constant factor, and the end-of-chain anchors double as the golden
equations shipped under ``goldens/``.

A few recorded displays are kept in a corrected shape where the source
display is internally inconsistent (a factor of the field dropped from one
term, a dimensionally impossible coefficient); the corrections are the
unique forms consistent with the surrounding derivation, and the affected
anchors are eq41, eq47 and eq51.
"""

from __future__ import annotations

from functools import lru_cache

from . import eq_parser
from .equations import Equation

FORMS: dict[str, str] = {
    # -- free particle, boundary-integral route
    "eq1": """
        coords t, x, y, z;
        field S;
        param U(x, y, z), hbar, m;
        eq: dt(S) + dot(grad(S), grad(S))/(2*m) + U = 0;
    """,
    "eq5": """
        coords t, x, y, z;
        field Psi;
        param U(x, y, z), hbar, m;
        eq: (hbar/i)*Psi*dt(Psi) - (hbar^2/(2*m))*dot(grad(Psi), grad(Psi))
            + U*Psi^2 = 0;
    """,
    "eq9": """
        coords t, x, y, z;
        field Psi;
        param U(x, y, z), hbar, m;
        eq: (hbar/i)*conj(Psi)*dt(Psi)
            + (hbar^2/(2*m))*dot(grad(Psi), grad(conj(Psi)))
            + U*Psi*conj(Psi) = 0;
    """,
    "eq14": """
        coords t, x, y, z;
        field Psi;
        param U(x, y, z), hbar, m;
        eq: i*hbar*dt(Psi) = -(hbar^2/(2*m))*lap(Psi) + U*Psi;
    """,

    # -- charged particle, boundary-integral route
    "eq16": """
        coords t, x, y, z;
        field S;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: dt(S) + dot(grad(S) - e*A, grad(S) - e*A)/(2*m) + e*phi = 0;
    """,
    "eq17": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: (hbar/i)*conj(Psi)*dt(Psi)
            + (hbar^2*dot(grad(Psi), grad(conj(Psi)))
               + (hbar/i)*e*Psi*dot(A, grad(conj(Psi)))
               - (hbar/i)*e*conj(Psi)*dot(A, grad(Psi))
               + e^2*dot(A, A)*Psi*conj(Psi))/(2*m)
            + e*phi*Psi*conj(Psi) = 0;
    """,
    "eq18": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: i*hbar*dt(Psi) = -(hbar^2/(2*m))*lap(Psi)
            + (i*hbar*e/(2*m))*div(A)*Psi
            + (i*hbar*e/m)*dot(A, grad(Psi))
            + (e^2/(2*m))*dot(A, A)*Psi
            + e*phi*Psi;
    """,

    # -- two bodies, boundary-integral route
    "eq19": """
        coords t, x1, y1, z1, x2, y2, z2;
        field S;
        param U(x1, y1, z1, x2, y2, z2), hbar, m1, m2;
        eq: dt(S)
            + (d(S, x1)^2 + d(S, y1)^2 + d(S, z1)^2)/(2*m1)
            + (d(S, x2)^2 + d(S, y2)^2 + d(S, z2)^2)/(2*m2)
            + U = 0;
    """,
    "eq20": """
        coords t, x1, y1, z1, x2, y2, z2;
        field Psi;
        param U(x1, y1, z1, x2, y2, z2), hbar, m1, m2;
        eq: (hbar/i)*conj(Psi)*dt(Psi)
            + (hbar^2/(2*m1))*(d(Psi, x1)*d(conj(Psi), x1)
                               + d(Psi, y1)*d(conj(Psi), y1)
                               + d(Psi, z1)*d(conj(Psi), z1))
            + (hbar^2/(2*m2))*(d(Psi, x2)*d(conj(Psi), x2)
                               + d(Psi, y2)*d(conj(Psi), y2)
                               + d(Psi, z2)*d(conj(Psi), z2))
            + U*Psi*conj(Psi) = 0;
    """,
    "eq22": """
        coords t, x1, y1, z1, x2, y2, z2;
        field Psi;
        param U(x1, y1, z1, x2, y2, z2), hbar, m1, m2;
        eq: i*hbar*dt(Psi) =
            -(hbar^2/(2*m1))*(d(d(Psi, x1), x1) + d(d(Psi, y1), y1)
                              + d(d(Psi, z1), z1))
            - (hbar^2/(2*m2))*(d(d(Psi, x2), x2) + d(d(Psi, y2), y2)
                               + d(d(Psi, z2), z2))
            + U*Psi;
    """,

    # -- relativistic spin-0, boundary-integral route
    "eq23": """
        coords x0, x1, x2, x3;
        field S;
        param e, hbar, m;
        vecfield A(x0, x1, x2, x3);
        metric g diag(1, -1, -1, -1);
        eq: sum(j, k) g[j, k]*(d(S, j) + e*A[j])*(d(S, k) + e*A[k])
            - m^2 = 0;
    """,
    "eq24": """
        coords x0, x1, x2, x3;
        field Psi;
        param e, hbar, m;
        vecfield A(x0, x1, x2, x3);
        metric g diag(1, -1, -1, -1);
        eq: sum(j, k) g[j, k]*(-i*hbar*d(Psi, j) + e*A[j]*Psi)
                             *conj(-i*hbar*d(Psi, k) + e*A[k]*Psi)
            - m^2*Psi*conj(Psi) = 0;
    """,
    "eq26": """
        coords x0, x1, x2, x3;
        field Psi;
        param e, hbar, m;
        vecfield A(x0, x1, x2, x3);
        metric g diag(1, -1, -1, -1);
        eq: sum(j, k) g[j, k]*(-hbar^2*d(d(Psi, k), j)
                               - i*hbar*e*d(A[k]*Psi, j)
                               - i*hbar*e*A[j]*d(Psi, k)
                               + e^2*A[j]*A[k]*Psi)
            - m^2*Psi = 0;
    """,

    # -- squared-factor route to the first-order system
    "eq27": """
        coords t, x, y, z;
        field S;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: (dt(S) + e*phi)^2
            - dot(grad(S) - e*A, grad(S) - e*A) - m^2 = 0;
    """,
    "eq28": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: (i*hbar*dt(Psi) - e*phi*Psi)*conj(i*hbar*dt(Psi) - e*phi*Psi) =
            (-i*hbar*d(Psi, x) - e*A_x*Psi)*conj(-i*hbar*d(Psi, x) - e*A_x*Psi)
            + (-i*hbar*d(Psi, y) - e*A_y*Psi)*conj(-i*hbar*d(Psi, y) - e*A_y*Psi)
            + (-i*hbar*d(Psi, z) - e*A_z*Psi)*conj(-i*hbar*d(Psi, z) - e*A_z*Psi)
            + m^2*Psi*conj(Psi);
    """,
    "eq30": """
        coords t, x, y, z;
        field Psi;
        param alpha1, alpha2, alpha3, beta, e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: i*hbar*dt(Psi) =
            alpha1*(-i*hbar*d(Psi, x) - e*A_x*Psi)
            + alpha2*(-i*hbar*d(Psi, y) - e*A_y*Psi)
            + alpha3*(-i*hbar*d(Psi, z) - e*A_z*Psi)
            + e*phi*Psi + m*beta*Psi;
    """,

    # -- free particle, dissipative route
    "eq35": """
        coords t, x, y, z;
        field Sq;
        param U(x, y, z), hbar, m, nu;
        eq: dt(Sq) + dot(grad(Sq), grad(Sq))/(2*m) + U - nu*lap(Sq) = 0;
    """,
    "eq36": """
        coords t, x, y, z;
        field Psi;
        param U(x, y, z), hbar, m, nu;
        eq: -i*hbar*Psi*dt(Psi)
            - (hbar^2/(2*m) - nu*hbar/i)*dot(grad(Psi), grad(Psi))
            - nu*(hbar/i)*Psi*lap(Psi)
            + U*Psi^2 = 0;
    """,
    "eq37": """
        coords t, x, y, z;
        field Psi;
        param U(x, y, z), hbar, m;
        eq: i*hbar*dt(Psi) = -(hbar^2/(2*m))*lap(Psi) + U*Psi;
    """,

    # -- charged particle, dissipative route
    "eq38": """
        coords t, x, y, z;
        field S;
        param e, hbar, m, nu, phi(x, y, z);
        vecfield A(x, y, z);
        eq: dt(S) + dot(grad(S) - e*A, grad(S) - e*A)/(2*m) + e*phi =
            nu*(lap(S) - e*div(A));
    """,
    "eq39": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, nu, phi(x, y, z);
        vecfield A(x, y, z);
        eq: Psi*(-i*hbar*dt(Psi)
                 + (e^2*dot(A, A)*Psi - 2*(hbar/i)*e*dot(A, grad(Psi)))/(2*m)
                 + e*phi*Psi
                 - nu*((hbar/i)*lap(Psi) - e*Psi*div(A)))
            + dot(grad(Psi), grad(Psi))*(nu*hbar/i - hbar^2/(2*m)) = 0;
    """,
    "eq40": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, phi(x, y, z);
        vecfield A(x, y, z);
        eq: i*hbar*dt(Psi) = -(hbar^2/(2*m))*lap(Psi)
            + (i*hbar*e/(2*m))*div(A)*Psi
            + (i*hbar*e/m)*dot(A, grad(Psi))
            + (e^2/(2*m))*dot(A, A)*Psi
            + e*phi*Psi;
    """,

    # -- relativistic spin-0, dissipative route (eq41 kept in the corrected,
    #    degree-2 homogeneous shape)
    "eq41": """
        coords x0, x1, x2, x3;
        field Psi;
        param e, hbar, m, nu;
        vecfield A(x0, x1, x2, x3);
        metric g diag(1, -1, -1, -1);
        eq: sum(j, k) g[j, k]*(-i*hbar*d(Psi, j) + e*Psi*A[j])
                             *(-i*hbar*d(Psi, k) + e*Psi*A[k]) =
            m^2*Psi^2
            + sum(j, k) nu*g[j, k]*(-i*hbar*(Psi*d(d(Psi, j), k)
                                             - d(Psi, j)*d(Psi, k))
                                    + e*Psi^2*d(A[j], k));
    """,
    "eq42": """
        coords x0, x1, x2, x3;
        field Psi;
        param e, hbar, m;
        vecfield A(x0, x1, x2, x3);
        metric g diag(1, -1, -1, -1);
        eq: sum(j, k) g[j, k]*(-hbar^2*d(d(Psi, k), j)
                               - i*hbar*e*d(A[k]*Psi, j)
                               - i*hbar*e*A[j]*d(Psi, k)
                               + e^2*A[j]*A[k]*Psi)
            = m^2*Psi;
    """,

    # -- spin coupling, dissipative route (eq47 kept in the corrected shape:
    #    the charge factor follows the recorded moment-energy convention and
    #    the dropped gauge-divergence term is restored)
    "eq46": """
        coords t, x, y, z;
        field S;
        param e, hbar, m, nuq, nus, phi(x, y, z), s1, s2, s3;
        vecfield A(x, y, z);
        eq: dt(S) + dot(grad(S) - e*A, grad(S) - e*A)/(2*m) + e*phi =
            div(nuq*(grad(S) - e*A) - e*nus*cross((s1, s2, s3), A));
    """,
    "eq47": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, nuq, nus, phi(x, y, z), s1, s2, s3;
        vecfield A(x, y, z);
        eq: -i*hbar*Psi*dt(Psi)
            + dot(-i*hbar*grad(Psi) - e*Psi*A, -i*hbar*grad(Psi) - e*Psi*A)/(2*m)
            + e*phi*Psi^2 =
            nuq*(hbar/i)*(Psi*lap(Psi) - dot(grad(Psi), grad(Psi)))
            - nuq*e*Psi^2*div(A)
            - e*nus*Psi^2*div(cross((s1, s2, s3), A));
    """,
    "eq48": """
        coords t, x, y, z;
        field Psi;
        param e, hbar, m, phi(x, y, z), sigma1, sigma2, sigma3;
        vecfield A(x, y, z);
        eq: i*hbar*dt(Psi) = -(hbar^2/(2*m))*lap(Psi)
            + (i*hbar*e/(2*m))*div(A)*Psi
            + (i*hbar*e/m)*dot(A, grad(Psi))
            + (e^2/(2*m))*dot(A, A)*Psi
            + e*phi*Psi
            - (e*hbar/m)*dot((sigma1, sigma2, sigma3), curl(A))*Psi;
    """,

    # -- diagonal-metric route (eq51 kept in the corrected, degree-2
    #    homogeneous shape)
    "eq51": """
        coords x0, x1, x2, x3;
        field Psi;
        param g0(x0, x1, x2, x3), g1(x0, x1, x2, x3), g2(x0, x1, x2, x3),
              g3(x0, x1, x2, x3), hbar, m,
              nu0(x0, x1, x2, x3), nu1(x0, x1, x2, x3), nu2(x0, x1, x2, x3),
              nu3(x0, x1, x2, x3);
        metric g diag(g0, g1, g2, g3);
        metric nu diag(nu0, nu1, nu2, nu3);
        eq: sum(j) (-hbar^2)*g[j, j]*d(Psi, j)^2
            - m^2*Psi^2
            + sum(j) i*hbar*nu[j, j]*(Psi*d(d(Psi, j), j) - d(Psi, j)^2)
            + sum(j) i*hbar*d(nu[j, j], j)*Psi*d(Psi, j)
            - sum(j, k) i*hbar*nu[j, j]*d(g[k, k], j)*g[k, k]^(-1)
                        *Psi*d(Psi, j)/2 = 0;
    """,
    "eq53": """
        coords x0, x1, x2, x3;
        field Psi;
        param g0(x0, x1, x2, x3), g1(x0, x1, x2, x3), g2(x0, x1, x2, x3),
              g3(x0, x1, x2, x3), kappa;
        metric g diag(g0, g1, g2, g3);
        eq: sum(j) g[j, j]*d(d(Psi, j), j)
            + sum(j) d(g[j, j], j)*d(Psi, j)
            - sum(j, k) g[j, j]*d(g[k, k], j)*g[k, k]^(-1)*d(Psi, j)/2
            + kappa^2*Psi = 0;
    """,

    # -- the centrally symmetric wave equation exactly as displayed,
    #    including the 3/2 radial coefficient this pipeline does not obtain
    "eq55": """
        coords t, r, theta, phi;
        field Psi;
        param kappa, rg;
        eq: r*(r - rg)^(-1)*d(Psi, t, 2)
            - (1 - rg*r^(-1))*d(Psi, r, 2)
            - r^(-2)*sin(theta)^(-2)*d(Psi, phi, 2)
            - r^(-2)*d(Psi, theta, 2)
            - 2*r^(-1)*(1 - (3/2)*rg*r^(-1))*d(Psi, r)
            - r^(-2)*cos(theta)*sin(theta)^(-1)*d(Psi, theta)
            + kappa^2*Psi = 0;
    """,
}

#: anchors whose recorded form is also a golden end-of-chain equation
GOLDEN_ANCHORS = ("eq14", "eq18", "eq22", "eq26", "eq30",
                  "eq37", "eq40", "eq42", "eq48", "eq53")


def has(anchor: str) -> bool:
    return anchor in FORMS


@lru_cache(maxsize=None)
def document(anchor: str) -> eq_parser.Document:
    return eq_parser.parse(FORMS[anchor])


def equation(anchor: str) -> Equation:
    eq = document(anchor).equation
    if not isinstance(eq, Equation):
        raise TypeError(f"{anchor} records a vector equation")
    return eq


def canonical_text(anchor: str) -> str:
    """The recorded form reprinted through the canonical formatter; golden
    files under ``goldens/`` hold exactly this text."""
    return eq_parser.format_document(document(anchor))
