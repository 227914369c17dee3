//! Small dense matrix kernels backing convolution and dense layers.
//!
//! Row-major f64 throughout. The three entry points cover the layouts the
//! layers need without materializing transposes:
//!
//! * [`gemm`]      — C += A·B
//! * [`gemm_abt`]  — C += A·Bᵀ
//! * [`gemm_atb`]  — C += Aᵀ·B
//!
//! On x86-64 the kernels are compiled a second time with AVX2+FMA enabled
//! and dispatched at runtime; the portable path is what every other target
//! (including wasm) uses.

#[inline(always)]
fn gemm_impl(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            let b_row = &b[p * n..(p + 1) * n];
            for (cv, bv) in c_row.iter_mut().zip(b_row.iter()) {
                *cv += aip * bv;
            }
        }
    }
}

#[inline(always)]
fn gemm_abt_impl(c: &mut [f64], a: &[f64], b: &[f64], m: usize, t: usize, n: usize) {
    debug_assert_eq!(a.len(), m * t);
    debug_assert_eq!(b.len(), n * t);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * t..(i + 1) * t];
        for j in 0..n {
            let b_row = &b[j * t..(j + 1) * t];
            let mut acc = 0.0;
            for (av, bv) in a_row.iter().zip(b_row.iter()) {
                acc += av * bv;
            }
            c[i * n + j] += acc;
        }
    }
}

#[inline(always)]
fn gemm_atb_impl(c: &mut [f64], a: &[f64], b: &[f64], t: usize, m: usize, n: usize) {
    debug_assert_eq!(a.len(), t * m);
    debug_assert_eq!(b.len(), t * n);
    debug_assert_eq!(c.len(), m * n);
    for p in 0..t {
        let a_row = &a[p * m..(p + 1) * m];
        let b_row = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let api = a_row[i];
            let c_row = &mut c[i * n..(i + 1) * n];
            for (cv, bv) in c_row.iter_mut().zip(b_row.iter()) {
                *cv += api * bv;
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod x86 {
    #[target_feature(enable = "avx2", enable = "fma")]
    pub unsafe fn gemm(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
        super::gemm_impl(c, a, b, m, k, n);
    }

    #[target_feature(enable = "avx2", enable = "fma")]
    pub unsafe fn gemm_abt(c: &mut [f64], a: &[f64], b: &[f64], m: usize, t: usize, n: usize) {
        super::gemm_abt_impl(c, a, b, m, t, n);
    }

    #[target_feature(enable = "avx2", enable = "fma")]
    pub unsafe fn gemm_atb(c: &mut [f64], a: &[f64], b: &[f64], t: usize, m: usize, n: usize) {
        super::gemm_atb_impl(c, a, b, t, m, n);
    }

    pub fn have_avx2_fma() -> bool {
        is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma")
    }
}

/// C (m×n) += A (m×k) · B (k×n).
pub fn gemm(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    #[cfg(target_arch = "x86_64")]
    if x86::have_avx2_fma() {
        // Safety: feature presence checked at runtime.
        unsafe { x86::gemm(c, a, b, m, k, n) };
        return;
    }
    gemm_impl(c, a, b, m, k, n);
}

/// C (m×n) += A (m×t) · Bᵀ, with B stored as (n×t).
pub fn gemm_abt(c: &mut [f64], a: &[f64], b: &[f64], m: usize, t: usize, n: usize) {
    #[cfg(target_arch = "x86_64")]
    if x86::have_avx2_fma() {
        unsafe { x86::gemm_abt(c, a, b, m, t, n) };
        return;
    }
    gemm_abt_impl(c, a, b, m, t, n);
}

/// C (m×n) += Aᵀ · B, with A stored as (t×m) and B as (t×n).
pub fn gemm_atb(c: &mut [f64], a: &[f64], b: &[f64], t: usize, m: usize, n: usize) {
    #[cfg(target_arch = "x86_64")]
    if x86::have_avx2_fma() {
        unsafe { x86::gemm_atb(c, a, b, t, m, n) };
        return;
    }
    gemm_atb_impl(c, a, b, t, m, n);
}
