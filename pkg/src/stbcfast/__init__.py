"""Space-time block code decoding for a massive-MIMO uplink with O(M^2)
updates of the ZF/MMSE decoder inverse as users join, leave or refresh
their channel estimates."""

from .channel import SystemConfig, UserChannel, assemble_channel, draw_user_channel, received_signal
from .codec import coding_constants, constellation, effective_channel, encode
from .decoder import DecoderMode, DecoderState, build_z, filter_and_decode, new_state, rebuild
from .fast_update import add_user, add_users, remove_user, remove_users, update_csi
from .linalg import SingularMatrixError, gram, hpd_inverse

__version__ = "0.1.0"
