import os
import tempfile

# Keep the persistent configuration of test runs away from the user's
os.environ.setdefault("SWA_DATA_DIR", tempfile.mkdtemp(prefix="swa-test-"))
os.environ.pop("SWA_JOBS", None)
