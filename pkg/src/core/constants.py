import codecs

ENCODING_UTF_8 = codecs.lookup("utf-8").name

ELF_MAGIC = b"\x7fELF"
ELF_MACHINE_ARM = 40
ELF_MACHINE_X86_64 = 62

BUSYBOX_COMPONENT = "busybox"
BUSYBOX_VERSION_MARKER = b"BusyBox v"
PRINTABLE_RUN_MIN_LENGTH = 4

UNKNOWN_LABEL = "unknown"

# Fuzzer input placeholders, shared with the external fuzzer's command line syntax.
INPUT_FILE_PLACEHOLDER = "@@"
TARGET_PLACEHOLDER = "{target}"

DEFAULT_MODEL_ID = "gpt-4-0613"
DEFAULT_TEMPERATURE = 0.7
DEFAULT_CHAT_COMPLETIONS_URL = "https://api.openai.com/v1/chat/completions"
DEFAULT_CREDENTIALS_ENV_VAR = "OPENAI_API_KEY"
DEFAULT_MAX_RESPONSE_BYTES = 64_000

DEFAULT_POLL_INTERVAL_S = 5
SHUTDOWN_GRACE_PERIOD_S = 5
MAX_UNPARSABLE_STATS_POLLS = 3

DEFAULT_REPLAY_TIMEOUT_MS = 1000
DEFAULT_SIGNATURE_FRAMES = 5
STACK_EXHAUSTION_DEPTH = 200
PAGE_SIZE = 4096
DEFAULT_MINIMIZATION_STEPS = 5000

CORPUS_META_FILE = "corpus.meta.json"
STORE_INDEX_FILE = "index.jsonl"
STORE_BLOBS_DIR = "blobs"
STORE_LOCK_FILE = ".lock"
STATS_DUMP_SUFFIX = ".stats.json"

HARNESS_PROFILES = {
    "awk": {"argv_template": ["{target}", "awk", "-f", "@@"]},
    "dc": {"argv_template": ["{target}", "dc", "@@"]},
}
