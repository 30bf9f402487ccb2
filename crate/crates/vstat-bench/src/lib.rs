//! Shared fixtures for the benchmarks.

use std::sync::Arc;
use vstat_core::hoeffding::{tensor_component, HoeffdingComponent, Marginal};
use vstat_core::kernels::KernelSpec;
use vstat_core::mixing::{generate_path, ProcessKind, ProcessSpec};
use vstat_core::rff::{build_expansion, ApproxBudget};
use vstat_core::SamplePath;

pub fn gaussian_component(features: usize, p: usize) -> HoeffdingComponent {
    let spec = KernelSpec::gaussian(2, 1);
    let budget = ApproxBudget::proportional(features, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let exp = Arc::new(build_expansion(&spec, &budget, 7).unwrap());
    let marginal = Marginal::StandardNormal { d: 1 };
    tensor_component(exp, &marginal, p, 20_000, 11).unwrap()
}

pub fn iid_path(n: usize) -> SamplePath {
    let spec = ProcessSpec::new(ProcessKind::Iid, 1).unwrap();
    generate_path(&spec, n, 3).unwrap()
}
