from .data_store import DataStore
from .local_fs_store import LocalFS

# Global Data Store instances.
LOCAL_FS_STORE: DataStore = LocalFS()

# Configure which storage to use for run configurations and cover files here.
CONFIG_DATA_STORE: DataStore = LOCAL_FS_STORE

# Storage for written reports
REPORT_DATA_STORE: DataStore = LOCAL_FS_STORE
