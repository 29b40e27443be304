from ..core import LdpcLogger, get_settings
from ..sim_harness import (
    ChannelConfig,
    Modulation,
    SeedPolicy,
    SimulationSetup,
    StopRule,
    decoder_spec,
    run_fer_point,
)
from ..utils.helpers import error_response, success_response
from . import graph_instances

logger = LdpcLogger("services.simulation")

# keeps a single tool call interactive
MAX_TOOL_FRAMES = 2000


def register(mcp_instance):
    """Register the Monte-Carlo tools with the MCP instance."""

    @mcp_instance.tool()
    def fer_point(
        decoder: str = "gams3-fx",
        ebn0_db: float = 2.0,
        bg: int = 1,
        z: int = 384,
        rate: str = "1/3",
        modulation: str = "qpsk",
        max_frames: int = 200,
        target_errors: int = 50,
        i_max: int = 15,
        seed: int | None = None,
        allow_placeholder_shifts: bool | None = None,
    ) -> str:
        """
        Frame and bit error rate of one decoder at one Eb/N0.

        Args:
            decoder: Decoder label, e.g. "nms", "gams3" or "gams3-fx"
            ebn0_db: Eb/N0 in dB
            bg: Base graph (1 or 2)
            z: Lifting size
            rate: Code rate as a fraction
            modulation: bpsk, qpsk, qam16 or qam64
            max_frames: Frame budget (at most 2000 per call)
            target_errors: Stop after this many frame errors
            i_max: Maximum decoding iterations
            seed: Master seed (default from GAMS_LDPC_SEED)
            allow_placeholder_shifts: Run on placeholder shift tables (default from
                GAMS_LDPC_ALLOW_PLACEHOLDER_SHIFTS)

        Returns:
            The CSV-schema row with FER, BER, confidence interval and iterations
        """
        try:
            config, _ = graph_instances.resolve_code(bg, z, rate)
            settings = get_settings()
            setup = SimulationSetup(
                seeds=SeedPolicy(settings.seed if seed is None else seed),
                stop=StopRule(min(max_frames, MAX_TOOL_FRAMES), target_errors),
                i_max=i_max,
                frequency_hz=settings.frequency_hz,
                data_dir=graph_instances.get_data_dir(),
                allow_placeholder_shifts=(
                    settings.allow_placeholder_shifts
                    if allow_placeholder_shifts is None
                    else allow_placeholder_shifts
                ),
            )
            spec = decoder_spec(decoder, config.bg_id)
            channel = ChannelConfig(Modulation.parse(modulation), ebn0_db, config)
            logger.audit_log(
                action="fer_point", resource=config.label(), details={"decoder": spec.name, "ebn0_db": ebn0_db}
            )
            stats = run_fer_point(spec, channel, setup)
            return success_response(**stats.csv_row())
        except Exception as e:
            logger.error(f"fer_point failed: {e}")
            return error_response(e)
