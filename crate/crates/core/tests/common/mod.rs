#![allow(dead_code)]

pub mod hp;
