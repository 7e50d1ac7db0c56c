# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled orbit kernel on top of MPFR.

Same contract as ``_kernel_py``: reals cross the boundary as raw
``(mantissa, exponent)`` pairs of Python ints, so no MPFR object ever
escapes this module.
"""

from libc.math cimport pow as cpow, isfinite
from libc.stdlib cimport free

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]
    void mpz_init(mpz_t)
    void mpz_clear(mpz_t)
    char *mpz_get_str(char *, int, const mpz_t)

cdef extern from "mpfr.h":
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct mpfr_t[1]
    ctypedef long mpfr_prec_t
    ctypedef long mpfr_exp_t
    ctypedef int mpfr_rnd_t
    mpfr_rnd_t MPFR_RNDN
    void mpfr_init2(mpfr_t, mpfr_prec_t)
    void mpfr_clear(mpfr_t)
    int mpfr_set(mpfr_t, const mpfr_t, mpfr_rnd_t)
    int mpfr_set_d(mpfr_t, double, mpfr_rnd_t)
    int mpfr_set_ui(mpfr_t, unsigned long, mpfr_rnd_t)
    int mpfr_set_str(mpfr_t, const char *, int, mpfr_rnd_t)
    int mpfr_mul_2si(mpfr_t, const mpfr_t, long, mpfr_rnd_t)
    int mpfr_add(mpfr_t, const mpfr_t, const mpfr_t, mpfr_rnd_t)
    int mpfr_sub(mpfr_t, const mpfr_t, const mpfr_t, mpfr_rnd_t)
    int mpfr_ui_sub(mpfr_t, unsigned long, const mpfr_t, mpfr_rnd_t)
    int mpfr_sub_ui(mpfr_t, const mpfr_t, unsigned long, mpfr_rnd_t)
    int mpfr_div(mpfr_t, const mpfr_t, const mpfr_t, mpfr_rnd_t)
    int mpfr_pow(mpfr_t, const mpfr_t, const mpfr_t, mpfr_rnd_t)
    int mpfr_pow_ui(mpfr_t, const mpfr_t, unsigned long, mpfr_rnd_t)
    int mpfr_cmp(const mpfr_t, const mpfr_t)
    int mpfr_cmp_ui(const mpfr_t, unsigned long)
    int mpfr_zero_p(const mpfr_t)
    int mpfr_integer_p(const mpfr_t)
    unsigned long mpfr_get_ui(const mpfr_t, mpfr_rnd_t)
    double mpfr_get_d(const mpfr_t, mpfr_rnd_t)
    mpfr_exp_t mpfr_get_z_2exp(mpz_t, const mpfr_t)

BACKEND = "mpfr"
KIND_CANONICAL = 0
KIND_RIGID = 1
DEF STEP_ULPS = 8.0


cdef void _load(mpfr_t dst, object raw, long prec):
    # exact read at sufficient precision, then one rounding to ``prec``
    cdef mpfr_t tmp
    man, exp = raw
    man = int(man)
    cdef long bits = max(man.bit_length(), 64)
    mpfr_init2(tmp, bits)
    s = (format(man, "x") if man >= 0 else "-" + format(-man, "x")).encode("ascii")
    mpfr_set_str(tmp, s, 16, MPFR_RNDN)
    mpfr_mul_2si(tmp, tmp, int(exp), MPFR_RNDN)
    mpfr_set(dst, tmp, MPFR_RNDN)
    mpfr_clear(tmp)


cdef object _dump(mpfr_t x):
    cdef mpz_t z
    cdef char *buf
    cdef mpfr_exp_t e
    if mpfr_zero_p(x):
        return (0, 0)
    mpz_init(z)
    e = mpfr_get_z_2exp(z, x)
    buf = mpz_get_str(NULL, 16, z)
    man = int(buf.decode("ascii"), 16)
    free(buf)
    mpz_clear(z)
    # normalise like mpmath: odd mantissa
    exp = int(e)
    if man:
        tz = (man & -man).bit_length() - 1
        man >>= tz
        exp += tz
    return (man, exp)


cdef inline double _deriv_double(double u, double w, double nu, double inv_span):
    cdef double p, q, s
    if u <= 0.0 or w <= 0.0:
        return 0.0
    p = cpow(u, nu)
    q = cpow(w, nu)
    s = p + q
    return nu * p * q / (u * w * s * s) * inv_span


cdef inline double _step_error(double err, double u, double w, double nu, double inv_span, double floor_err):
    cdef double du = err * inv_span
    cdef double d0 = _deriv_double(u, w, nu, inv_span)
    cdef double d1 = _deriv_double(u + du, w - du, nu, inv_span)
    cdef double d2 = _deriv_double(u - du, w + du, nu, inv_span)
    if d1 > d0:
        d0 = d1
    if d2 > d0:
        d0 = d2
    return err * d0 + floor_err


cdef class _Stepper:
    cdef int kind
    cdef long prec
    cdef mpfr_t b, t, nu, span, u, w, p, q, v, tmp
    cdef int nu_is_int
    cdef unsigned long nu_ui
    cdef double nu_f, inv_span, floor_err

    def __cinit__(self, spec, long prec):
        kind, b, t, nu = spec
        self.kind = kind
        self.prec = prec
        mpfr_init2(self.b, prec)
        mpfr_init2(self.t, prec)
        mpfr_init2(self.nu, prec)
        mpfr_init2(self.span, prec)
        mpfr_init2(self.u, prec)
        mpfr_init2(self.w, prec)
        mpfr_init2(self.p, prec)
        mpfr_init2(self.q, prec)
        mpfr_init2(self.v, prec)
        mpfr_init2(self.tmp, prec)
        _load(self.b, b, prec)
        _load(self.t, t, prec)
        _load(self.nu, nu, prec)
        mpfr_ui_sub(self.span, 1, self.b, MPFR_RNDN)
        self.nu_is_int = mpfr_integer_p(self.nu) and mpfr_cmp_ui(self.nu, 0) > 0
        self.nu_ui = mpfr_get_ui(self.nu, MPFR_RNDN) if self.nu_is_int else 0
        self.nu_f = mpfr_get_d(self.nu, MPFR_RNDN)
        self.inv_span = 1.0 / mpfr_get_d(self.span, MPFR_RNDN) if kind == KIND_CANONICAL else 1.0
        self.floor_err = STEP_ULPS * cpow(2.0, -<double>prec)

    def __dealloc__(self):
        mpfr_clear(self.b)
        mpfr_clear(self.t)
        mpfr_clear(self.nu)
        mpfr_clear(self.span)
        mpfr_clear(self.u)
        mpfr_clear(self.w)
        mpfr_clear(self.p)
        mpfr_clear(self.q)
        mpfr_clear(self.v)
        mpfr_clear(self.tmp)

    cdef int step(self, mpfr_t x, double *err, int *flat):
        """x <- f(x) in place; returns the winding increment."""
        cdef double uu
        if self.kind == KIND_RIGID:
            flat[0] = mpfr_zero_p(x)
            mpfr_add(x, x, self.t, MPFR_RNDN)
            err[0] = err[0] + self.floor_err
        elif mpfr_cmp(x, self.b) <= 0:
            flat[0] = 1
            # the flat spot forgets the incoming error unless x may lie just outside
            if err[0] > 0:
                mpfr_set_d(self.tmp, err[0], MPFR_RNDN)
                mpfr_add(self.tmp, x, self.tmp, MPFR_RNDN)
            if err[0] > 0 and mpfr_cmp(self.tmp, self.b) > 0:
                mpfr_sub(self.tmp, self.tmp, self.b, MPFR_RNDN)
                uu = mpfr_get_d(self.tmp, MPFR_RNDN) * self.inv_span
                err[0] = _step_error(err[0], uu, 1.0 - uu, self.nu_f, self.inv_span, self.floor_err)
            else:
                err[0] = self.floor_err
            mpfr_set(x, self.t, MPFR_RNDN)
        else:
            flat[0] = 0
            mpfr_sub(self.u, x, self.b, MPFR_RNDN)
            mpfr_div(self.u, self.u, self.span, MPFR_RNDN)
            mpfr_ui_sub(self.w, 1, x, MPFR_RNDN)
            mpfr_div(self.w, self.w, self.span, MPFR_RNDN)
            if self.nu_is_int:
                mpfr_pow_ui(self.p, self.u, self.nu_ui, MPFR_RNDN)
                mpfr_pow_ui(self.q, self.w, self.nu_ui, MPFR_RNDN)
            else:
                mpfr_pow(self.p, self.u, self.nu, MPFR_RNDN)
                mpfr_pow(self.q, self.w, self.nu, MPFR_RNDN)
            mpfr_add(self.q, self.p, self.q, MPFR_RNDN)
            mpfr_div(self.p, self.p, self.q, MPFR_RNDN)
            err[0] = _step_error(err[0], mpfr_get_d(self.u, MPFR_RNDN), mpfr_get_d(self.w, MPFR_RNDN),
                                 self.nu_f, self.inv_span, self.floor_err)
            mpfr_add(x, self.t, self.p, MPFR_RNDN)
        if mpfr_cmp_ui(x, 1) >= 0:
            mpfr_sub_ui(x, x, 1, MPFR_RNDN)
            return 1
        return 0


def advance(spec, x, long n, long prec, double err=0.0):
    """Apply the map ``n`` times; see ``_kernel_py.advance``."""
    cdef _Stepper st = _Stepper(spec, prec)
    cdef mpfr_t y
    cdef long j
    cdef long winding = 0
    cdef long absorbed = -1
    cdef int flat = 0
    mpfr_init2(y, prec)
    _load(y, x, prec)
    for j in range(n):
        winding += st.step(y, &err, &flat)
        if flat and absorbed < 0:
            absorbed = j
    out = _dump(y)
    mpfr_clear(y)
    return out, winding, err, absorbed


def trajectory(spec, x, long n, long prec, double err=0.0):
    """Like ``advance`` but keeps every image; see ``_kernel_py.trajectory``."""
    cdef _Stepper st = _Stepper(spec, prec)
    cdef mpfr_t y
    cdef long j
    cdef int w
    cdef long absorbed = -1
    cdef int flat = 0
    points = []
    windings = []
    errors = []
    mpfr_init2(y, prec)
    _load(y, x, prec)
    for j in range(n):
        w = st.step(y, &err, &flat)
        if flat and absorbed < 0:
            absorbed = j
        points.append(_dump(y))
        windings.append(w)
        errors.append(err if isfinite(err) else float("inf"))
    mpfr_clear(y)
    return points, windings, errors, absorbed
