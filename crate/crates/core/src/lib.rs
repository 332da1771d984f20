pub mod changeset;
pub mod dataset;
pub mod evalcore;
pub mod ledger;
pub mod modelgw;
pub mod oracle;
pub mod stability;
pub mod varmodel;
