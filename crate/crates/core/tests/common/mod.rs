#![allow(dead_code)]

pub mod gradcases;
pub mod oracle;
