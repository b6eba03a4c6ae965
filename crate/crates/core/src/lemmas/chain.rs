use super::{LemmaReport, Relation};
use crate::error::Result;
use crate::params::{evaluate_chain, ParameterSet};

const CHAIN_ID: &str = "parameter_chain";

/// All parameter conditions decided exactly; the measured value is the
/// number of failing conditions.
pub fn check_parameter_chain(p: &ParameterSet) -> Result<LemmaReport> {
    let chain = evaluate_chain(p)?;
    let failing: Vec<&str> = chain.conditions.iter().filter(|c| !c.holds).map(|c| c.id).collect();
    let conditions = serde_json::to_value(&chain.conditions).expect("serializable");
    Ok(LemmaReport::check(
        CHAIN_ID,
        format!("gamma = {}, beta = {}, delta = {}", p.gamma, p.beta, p.delta),
        Relation::AtMost,
        0.0,
        failing.len() as f64,
        0.0,
    )
    .with_trials(chain.conditions.len() as u64)
    .with_detail("failing", failing)
    .with_detail("binding", chain.binding)
    .with_detail("epsilon", chain.epsilon.to_string())
    .with_detail("zeta", chain.zeta.to_string())
    .with_detail("sigma_enclosure", vec![chain.sigma_enclosure.0, chain.sigma_enclosure.1])
    .with_detail("conditions", conditions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Exact;

    #[test]
    fn reference_set_reports_epsilon() {
        let r = check_parameter_chain(&ParameterSet::reference()).unwrap();
        assert!(r.passed);
        assert_eq!(r.measured_value, 0.0);
        assert_eq!(r.trials, 12);
        assert_eq!(r.details["epsilon"], "2^-1017");
        assert_eq!(r.details["conditions"].as_array().unwrap().len(), 12);
    }

    #[test]
    fn halves_fail() {
        let r = check_parameter_chain(&ParameterSet::uniform(Exact::pow2(-1))).unwrap();
        assert!(!r.passed);
        assert!(r.details["failing"].as_array().unwrap().len() >= 1);
    }
}
