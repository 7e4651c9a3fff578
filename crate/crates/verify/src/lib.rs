//! Holds the `acceptance` integration-test target; no library code.
