"""Independent reference implementations used only by the tests.

Two families:

* an extended-precision twin of the drain-current closed form plus
  Richardson-extrapolated central differences, used to check the analytic
  gm/gm'/gm'' (the 1e-5 V step would drown in float64 roundoff for a third
  derivative, so the differencing runs in mpmath);
* extended-precision complex re-evaluations of the intercept formulas.

Nothing here imports the analytic-derivative or intercept code paths it
checks.
"""

import mpmath as mp
from scipy import constants as _const

FD_STEP_V = 1e-5
_DPS = 40


def _mp_current_fn(p, v_ds, v_sb, temp_k):
    ut = mp.mpf(_const.k) * mp.mpf(temp_k) / mp.mpf(_const.e)
    n = mp.mpf(p.n_slope)
    nut = n * ut
    vth = mp.mpf(p.v_t0) + mp.mpf(p.gamma_body) * (
        mp.sqrt(mp.mpf(v_sb) + mp.mpf(p.phi2b)) - mp.sqrt(mp.mpf(p.phi2b))
    )
    ispec = 2 * n**2 * ut**2 * mp.mpf(p.k_prime) * (mp.mpf(p.w) / mp.mpf(p.l))
    sat = mp.tanh(mp.mpf(v_ds) / (4 * nut))

    def current(v_gs):
        x = (v_gs - vth) / nut
        lg = mp.log(1 + mp.exp(x / 2))
        return ispec * lg * lg * sat

    return current


def fd_derivatives(p, v_gs, v_ds, v_sb=0.0, temp_k=300.0, h=FD_STEP_V):
    """(i, d1, d2, d3) by central differences with one Richardson level."""
    with mp.workdps(_DPS):
        f = _mp_current_fn(p, v_ds, v_sb, temp_k)
        x0 = mp.mpf(v_gs)
        hh = mp.mpf(h)
        vals = {c: f(x0 + c * hh / 2) for c in (-4, -2, -1, 0, 1, 2, 4)}

        def d1(step_halves):
            s = step_halves
            return (vals[s] - vals[-s]) / (s * hh)

        def d2(s):
            return (vals[s] - 2 * vals[0] + vals[-s]) / (s * hh / 2) ** 2

        def d3(s):
            return (vals[2 * s] - 2 * vals[s] + 2 * vals[-s] - vals[-2 * s]) / (
                2 * (s * hh / 2) ** 3
            )

        rich = lambda coarse, fine: (4 * fine - coarse) / 3  # noqa: E731
        return (
            float(vals[0]),
            float(rich(d1(2), d1(1))),
            float(rich(d2(2), d2(1))),
            float(rich(d3(2), d3(1))),
        )


# --- complex re-evaluation of the intercept formulas -----------------------


def _mpc(z):
    return mp.mpc(complex(z).real, complex(z).imag)


def mp_g_omega(gm, c_gs, c_gd, z1, z2, omega):
    with mp.workdps(_DPS):
        gm_, cgs, cgd = mp.mpf(gm), mp.mpf(c_gs), mp.mpf(c_gd)
        w = mp.mpf(omega)
        num = 1 + 2j * w * cgs * _mpc(z1) + 2j * w * cgd * _mpc(z2)
        ctot = cgs + cgd
        if ctot == 0 or gm_ == 0:
            den = mp.mpf(1)
        else:
            den = 1 + (gm_ / ctot) * cgd * _mpc(z2)
        return complex(gm_ * num / den)


def mp_g_ob(a1, a2, c_gs, c_gd, z1_d, z2_d, z1_2, z2_2, d_omega, two_omega):
    with mp.workdps(_DPS):
        g_d = _mpc(mp_g_omega(a1, c_gs, c_gd, z1_d, z2_d, d_omega))
        g_2 = _mpc(mp_g_omega(a1, c_gs, c_gd, z1_2, z2_2, two_omega))
        a1_, a2_ = mp.mpf(a1), mp.mpf(a2)
        val = (2 * a2_**2 / 3) * (2 / (a1_ + g_d) + 1 / (a1_ + g_2))
        return complex(val)


def mp_eps(a1, a2, a3, c_gs, c_gd, z1_d, z2_d, z1_2, z2_2, d_omega, two_omega):
    with mp.workdps(_DPS):
        gob = _mpc(
            mp_g_ob(a1, a2, c_gs, c_gd, z1_d, z2_d, z1_2, z2_2, d_omega, two_omega)
        )
        return complex(mp.mpf(a3) - gob)


def mp_iip3_watts(a1, a2, a3, c_gs, c_gd, env, f_a, f_b):
    """Normalized intercept power computed entirely in mpmath."""
    with mp.workdps(_DPS):
        omega = 2 * mp.pi * mp.mpf(f_a)
        d_omega = 2 * mp.pi * abs(mp.mpf(f_b) - mp.mpf(f_a))
        two_omega = 2 * omega
        eps = _mpc(
            mp_eps(
                a1, a2, a3, c_gs, c_gd,
                env.z1(float(d_omega)), env.z2(float(d_omega)),
                env.z1(float(two_omega)), env.z2(float(two_omega)),
                float(d_omega), float(two_omega),
            )
        )
        denom = (
            6
            * mp.mpf(env.z1(float(omega)).real)
            * mp.mpf(env.h_mag)
            * mp.mpf(env.a1_mag) ** 3
            * abs(eps)
        )
        return float(mp.mpf(a1) / denom)
