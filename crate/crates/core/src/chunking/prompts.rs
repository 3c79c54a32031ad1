//! Versioned prompt templates for the LLM refinements. Changing a template
//! requires bumping its version, which also invalidates cached outputs.

pub const SUMMARY_VERSION: &str = "summary-v1";

pub const SUMMARY_TEMPLATE: &str = "You summarize one endpoint of an OpenAPI specification. \
The user message contains the endpoint as JSON (HTTP verb, path and operation object). \
Write a concise summary of two to four sentences describing what the endpoint does, \
which resource it operates on, its most important inputs, and what it returns. \
Answer with the summary text only.";

pub const QUERY_VERSION: &str = "query-v1";

pub const QUERY_TEMPLATE: &str = "You write example user requests for one endpoint of an OpenAPI specification. \
The user message contains the endpoint as JSON (HTTP verb, path and operation object). \
Write one natural-language question or instruction that a user could ask and that this endpoint \
would help to answer. Do not mention the HTTP verb or the path. Answer with the question only.";
