use std::ffi::CStr;
use std::ptr;

use s2pmlp_ffi::*;

struct Handle(*mut S2pSession);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { s2p_session_free(self.0) };
    }
}

fn session(seed: u64) -> Handle {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { s2p_session_new(2, 10, 1.0, seed, &mut h) },
        S2pStatus::Ok
    );
    assert!(!h.is_null());
    Handle(h)
}

fn last_error() -> String {
    let p = s2p_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}

#[test]
fn matmul_shares_sum_to_product() {
    let s = session(1);
    let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2 x 3
    let b = [1.0, 0.5, -1.0, 2.0, 0.0, 1.0]; // 3 x 2
    let (mut oa, mut ob) = ([0.0; 4], [0.0; 4]);
    let st = unsafe {
        s2p_matmul(
            s.0,
            a.as_ptr(),
            2,
            3,
            b.as_ptr(),
            2,
            oa.as_mut_ptr(),
            ob.as_mut_ptr(),
        )
    };
    assert_eq!(st, S2pStatus::Ok);
    let sum: Vec<f64> = oa.iter().zip(&ob).map(|(x, y)| x + y).collect();
    close(&sum, &[-1.0, 7.5, -1.0, 18.0], 1e-12);
    assert_eq!(unsafe { s2p_session_rounds(s.0) }, 6);
    assert!(unsafe { s2p_session_bytes_sent(s.0) } > 0);
}

#[test]
fn row_dot_and_elementwise_ops() {
    let s = session(2);
    let a = [0.5, -1.0, 2.0, 3.0];
    let b = [1.5, 0.25, -4.0, 1.0];
    let (mut oa, mut ob) = ([0.0; 2], [0.0; 2]);
    let st = unsafe {
        s2p_row_dot(
            s.0,
            a.as_ptr(),
            b.as_ptr(),
            2,
            2,
            oa.as_mut_ptr(),
            ob.as_mut_ptr(),
        )
    };
    assert_eq!(st, S2pStatus::Ok);
    close(&[oa[0] + ob[0], oa[1] + ob[1]], &[0.5, -5.0], 1e-12);

    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let cases: [(S2pElementwise, Vec<f64>); 4] = [
        (
            S2pElementwise::Hadamard,
            a.iter().zip(&b).map(|(x, y)| x * y).collect(),
        ),
        (
            S2pElementwise::Reciprocal,
            sum.iter().map(|x| 1.0 / x).collect(),
        ),
        (
            S2pElementwise::Relu,
            sum.iter().map(|x| x.max(0.0)).collect(),
        ),
        (S2pElementwise::Softmax, {
            let row = |r: &[f64]| {
                let e: Vec<f64> = r.iter().map(|x| x.exp()).collect();
                let t: f64 = e.iter().sum();
                e.into_iter().map(move |x| x / t)
            };
            row(&sum[..2]).chain(row(&sum[2..])).collect()
        }),
    ];
    for (op, want) in cases {
        let (mut oa, mut ob) = ([0.0; 4], [0.0; 4]);
        let st = unsafe {
            s2p_elementwise(
                s.0,
                op,
                a.as_ptr(),
                b.as_ptr(),
                2,
                2,
                oa.as_mut_ptr(),
                ob.as_mut_ptr(),
            )
        };
        assert_eq!(st, S2pStatus::Ok, "{op:?}");
        let got: Vec<f64> = oa.iter().zip(&ob).map(|(x, y)| x + y).collect();
        close(&got, &want, 1e-11);
    }

    let (mut oa, mut ob) = ([0.0; 4], [0.0; 4]);
    let op = S2pElementwise::ReluDerivative;
    let st = unsafe {
        s2p_elementwise(
            s.0,
            op,
            a.as_ptr(),
            b.as_ptr(),
            2,
            2,
            oa.as_mut_ptr(),
            ob.as_mut_ptr(),
        )
    };
    assert_eq!(st, S2pStatus::Ok);
    close(&oa, &[1.0, 0.0, 0.0, 1.0], 0.0);
    assert_eq!(oa, ob);
}

#[test]
fn errors_set_status_and_message() {
    let s = session(3);
    let a = [1.0, 2.0];
    let mut out = [0.0; 1];
    let st = unsafe {
        s2p_matmul(
            s.0,
            a.as_ptr(),
            2,
            1,
            a.as_ptr(),
            1,
            out.as_mut_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(st, S2pStatus::UnsupportedDimension);
    assert!(
        last_error().contains("unsupported dimension"),
        "{}",
        last_error()
    );

    let st = unsafe {
        s2p_row_dot(
            s.0,
            ptr::null(),
            a.as_ptr(),
            1,
            2,
            out.as_mut_ptr(),
            out.as_mut_ptr(),
        )
    };
    assert_eq!(st, S2pStatus::NullPointer);
    assert_eq!(last_error(), "a is null");

    let z = [0.0, 0.0];
    let (mut oa, mut ob) = ([0.0; 2], [0.0; 2]);
    let op = S2pElementwise::Reciprocal;
    let st = unsafe {
        s2p_elementwise(
            s.0,
            op,
            z.as_ptr(),
            z.as_ptr(),
            1,
            2,
            oa.as_mut_ptr(),
            ob.as_mut_ptr(),
        )
    };
    assert_eq!(st, S2pStatus::SingularInput);

    let name = unsafe { CStr::from_ptr(s2p_status_name(S2pStatus::TamperDetected)) };
    assert_eq!(name.to_str().unwrap(), "tamper detected");
}

#[test]
fn bad_config_and_null_handles() {
    let mut h = ptr::dangling_mut::<S2pSession>();
    let st = unsafe { s2p_session_new(0, 10, 1.0, 0, &mut h) };
    assert_eq!(st, S2pStatus::Usage);
    assert!(h.is_null());
    assert_eq!(
        unsafe { s2p_session_new(2, 10, 1.0, 0, ptr::null_mut()) },
        S2pStatus::NullPointer
    );
    assert_eq!(unsafe { s2p_session_rounds(ptr::null()) }, 0);
    unsafe { s2p_session_free(ptr::null_mut()) };
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/s2pmlp.h")).unwrap();
    assert!(header.contains("#ifndef S2PMLP_H"));
    assert!(header.contains("typedef struct S2pSession S2pSession;"));
    for f in [
        "s2p_last_error_message",
        "s2p_status_name",
        "s2p_session_new",
        "s2p_session_free",
        "s2p_session_bytes_sent",
        "s2p_session_rounds",
        "s2p_matmul",
        "s2p_row_dot",
        "s2p_elementwise",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(header.contains("S2P_STATUS_TAMPER_DETECTED = 5"));
    assert!(header.contains("S2P_ELEMENTWISE_SOFTMAX"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/s2pmlp.h");
    let status = std::process::Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-x",
            "c",
            header,
        ])
        .status();
    match status {
        Ok(s) => assert!(s.success(), "cc rejected the header"),
        // no C compiler on this machine
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => panic!("{e}"),
    }
}
