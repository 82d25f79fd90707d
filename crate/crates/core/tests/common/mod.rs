#![allow(dead_code)]

pub mod snippet_oracle;
