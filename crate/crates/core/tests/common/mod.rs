#![allow(dead_code)]

use smib_core::*;

pub fn reference_machine() -> MachineParams64 {
    MachineParams {
        xd: 1.7,
        xq: 1.64,
        xdp: 0.245,
        xe: 0.2,
        tdop: 5.9,
        m: 6.6,
        d: 0.0,
        ke: 400.0,
        omega_base: 2.0 * std::f64::consts::PI * 60.0,
        efd_max: 4.5,
        efd_min: -4.5,
    }
}

pub fn op(p0: f64) -> OperatingPoint64 {
    OperatingPoint { p0, q0: 0.496, vt0: 1.0 }
}

pub fn model() -> Smib64 {
    Smib::new(reference_machine(), op(0.8)).unwrap()
}

pub fn cpss() -> CpssParams64 {
    CpssParams {
        ke: 400.0,
        te: 0.05,
        kfe: 0.025,
        tfe: 1.0,
        tr: 6e-4,
        kstab: 17.57,
        tw: 6.6,
        t1: 1.48,
        t2: 0.33,
        t3: 3.55,
        t4: 11.57,
        vpss_max: 0.15,
        vpss_min: -0.15,
        efd_max: 4.5,
        efd_min: -4.5,
        vref: None,
    }
}

pub fn gains() -> ControllerSet64 {
    ControllerSet {
        bsfl: Some(BsflGains::new(5.0, 10.0, 15.0).unwrap()),
        dfl: Some(DflGains::new(1100.0, 185.0, 11.0).unwrap()),
        cpss: Some(cpss()),
    }
}
