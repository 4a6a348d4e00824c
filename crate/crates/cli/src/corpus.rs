//! The standard fixture corpus and a manifest of runs over it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use stratbundle::bundle::SampledStratifiedBundle;
use stratbundle::fixtures::{self, VertexFiber};
use stratbundle::monoid::{scalar_action_of, MonoidActionSample};
use stratbundle::report::Verdict;
use stratbundle::strata::Stratification;

use crate::io::{write_json, CliResult};
use crate::report::{Check, Report};

/// A command line relative to the corpus directory and its expected exit code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub args: Vec<String>,
    pub exit: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: Vec<Run>,
}

fn run(args: &str, exit: i32) -> Run {
    Run {
        args: args.split_whitespace().map(String::from).collect(),
        exit,
    }
}

fn v<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("fixtures serialize")
}

fn line_without_closure() -> Stratification {
    let b = fixtures::line_base(10);
    Stratification::new(1, b.strata().to_vec(), Vec::new()).expect("fixture is valid")
}

pub fn write(dir: &Path, r: &mut Report) -> CliResult<()> {
    let mut files: Vec<(String, serde_json::Value)> = Vec::new();
    let mut add = |name: &str, value: serde_json::Value| files.push((name.into(), value));

    add("strata/line.json", v(&fixtures::line_base(10)));
    add("strata/line-undeclared.json", v(&line_without_closure()));
    for level in 3..=6 {
        add(&format!("strata/cantor-{level}.json"), v(&fixtures::cantor(level, 3)));
    }

    let pass = fixtures::tilted_line_bundle(VertexFiber::Horizontal);
    add("bundles/tilted-pass.json", v(&pass));
    add("bundles/tilted-fail.json", v(&fixtures::tilted_line_bundle(VertexFiber::Vertical)));
    add("bundles/tilted-rank0.json", v(&fixtures::tilted_line_bundle(VertexFiber::Zero)));
    let trivial3 = SampledStratifiedBundle::trivial(fixtures::line_base(10), 3).expect("fixture is valid");
    add("bundles/trivial3.json", v(&trivial3));
    add("bundles/line-tangent.json", v(&fixtures::line_tangent_bundle(20)));
    add("bundles/radial-square.json", v(&fixtures::radial_square_bundle()));
    add("scenarios/tilted.json", v(&fixtures::tilted_line_scenario(&pass)));

    let grid = MonoidActionSample::default_t_grid();
    add("actions/scalar-tilted.json", v(&scalar_action_of(&pass, grid.clone())?));
    add("actions/scalar-trivial3.json", v(&scalar_action_of(&trivial3, grid)?));
    add("actions/scalar-squared.json", v(&fixtures::scalar_squared_action()));

    add("groups/negation.json", v(&fixtures::negation_on_line()));
    add("groups/dihedral-square.json", v(&fixtures::dihedral_square()));

    add("fields/euler-1.json", v(&fixtures::euler_field(1)));
    add("fields/euler-2.json", v(&fixtures::euler_field(2)));
    add("fields/coordinates-6.json", v(&fixtures::coordinate_fields(6)));

    let manifest = Manifest {
        runs: vec![
            run("check frontier --strata strata/line.json", 0),
            run("check frontier --strata strata/line-undeclared.json --eps-touch 0.15 --delta-cover 0.15", 2),
            run("check frontier --strata strata/cantor-3.json --eps-touch 1e-3 --delta-cover 0.02 --local-finiteness 0.1", 2),
            run("check whitney-a --bundle bundles/tilted-pass.json --scenario scenarios/tilted.json --tol-check 1e-3", 0),
            run("check whitney-a --bundle bundles/tilted-fail.json --scenario scenarios/tilted.json --tol-check 1e-3", 2),
            run("check whitney-a --bundle bundles/tilted-rank0.json --scenario scenarios/tilted.json --tol-check 1e-3", 0),
            run("check whitney-a --bundle bundles/tilted-pass.json --auto-sequence radial:0,50 --tol-check 1e-3", 0),
            run("check bundle --bundle bundles/tilted-pass.json", 0),
            run("check bundle --bundle bundles/radial-square.json", 0),
            run("check orthogonality --functor sym:2 --bundle bundles/trivial3.json", 0),
            run("check orthogonality --functor compose(wedge:2,sum(id,const:1)) --bundle bundles/radial-square.json", 0),
            run("apply-functor --functor wedge:2 --bundle bundles/trivial3.json --out out/trivial3-wedge2.json", 0),
            run("apply-functor --functor tensor:2 --bundle bundles/tilted-pass.json --out out/tilted-tensor2.json", 0),
            run("apply-functor --functor sym:3 --bundle bundles/radial-square.json --out out/radial-sym3.json", 0),
            run("monoid analyze --action actions/scalar-trivial3.json --out out/trivial3-reconstruction.json", 0),
            run("monoid analyze --action actions/scalar-tilted.json --cluster-radius 1e-9", 0),
            run("monoid analyze --action actions/scalar-squared.json", 2),
            run("equivariant tilde --group groups/negation.json --bundle bundles/line-tangent.json --out out/line-tilde.json", 0),
            run("equivariant quotient --group groups/negation.json --bundle bundles/line-tangent.json --out out/line-quotient.json", 0),
            run("equivariant tilde --group groups/dihedral-square.json --bundle bundles/radial-square.json --out out/radial-tilde.json", 0),
            run("equivariant quotient --group groups/dihedral-square.json --bundle bundles/radial-square.json --out out/radial-quotient.json", 0),
            run("foliation stratify --fields fields/euler-1.json --r-cc 0.015 --out out/euler-1-strata.json", 0),
            run("foliation bundle --fields fields/euler-2.json --r-cc 0.015 --whitney 5 --out out/euler-2-bundle.json", 0),
            run("foliation bundle --fields fields/coordinates-6.json --r-cc 1.2 --whitney 5 --out out/coordinates-bundle.json", 0),
        ],
    };
    add("manifest.json", v(&manifest));

    for (name, value) in &files {
        let path = dir.join(name);
        write_json(&path, value)?;
        r.outputs.insert(name.clone(), path.display().to_string());
    }
    r.inputs.insert("dir".into(), dir.display().to_string());
    r.push(Check::new(
        "fixtures",
        Verdict::Pass,
        format!("{} files", files.len()),
        json!({ "files": files.iter().map(|(n, _)| n).collect::<Vec<_>>() }),
    ));
    Ok(())
}
