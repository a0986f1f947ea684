use anyhow::Result;

use bmn::registry::{self, Group, Registry};

use crate::VerifyArgs;

pub fn verify(args: &VerifyArgs) -> Result<u8> {
    let groups: Vec<Group> =
        if args.only.is_empty() { Group::ALL.to_vec() } else { args.only.iter().map(|&g| g.into()).collect() };
    let reg = Registry::load();
    let checks = registry::verify(&reg, &groups);
    for check in &checks {
        if args.json {
            println!("{}", serde_json::to_string(check)?);
        } else {
            println!("{check}");
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} passed, {} failed", checks.len(), checks.len() - failed, failed);
    match checks.iter().find(|c| !c.passed) {
        None => Ok(0),
        Some(first) => {
            eprintln!(
                "first failure: {} {}: expected {}, got {}",
                first.group.name(),
                first.item,
                first.expected,
                first.actual
            );
            Ok(1)
        }
    }
}
