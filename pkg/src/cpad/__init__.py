"""Attribute-policy key encapsulation with verifiable deletion (CPAD).

A smart object seals data under an AEAD key encapsulated to a monotone
attribute policy; a fog store keeps the key ciphertext, a cloud store the
sealed payload.  Deleting a file rewrites the mandatory dummy-attribute
ciphertext row so that no issued key can recover the data key, and the
owner can verify the rewrite against a locally kept tag.
"""

from .abe import (
    KeyCiphertext,
    MasterSecretKey,
    PublicParams,
    UserSecretKey,
    decapsulate,
    encapsulate,
    keygen,
    setup,
)
from .deletion import (
    DeletionRequest,
    DeletionResponse,
    ObjectDeletionState,
    SigningKeypair,
    gen_signing_keypair,
    make_del_request,
    reencrypt,
    sign,
    verify_deletion,
    verify_sig,
)
from .group import (
    DEFAULT_PROFILE,
    P,
    BilinearGroup,
    OpCounter,
    SeededRng,
    SystemRng,
    counter_scope,
    get_group,
)
from .payload import SealedPayload, check_tag, derive_key, make_tag, seal, unseal
from .policy import (
    AccessPolicy,
    LsssProgram,
    ReconstructionPlan,
    ShareVector,
    compile_lsss,
    find_reconstruction,
    make_shares,
    parse_policy,
)

__version__ = "0.1.0"
